#include <cmath>
#include <cstdio>

#include "commands.hpp"
#include "modalkit/dataio.hpp"

namespace modalkit::cli {

using namespace modalkit::dataio;
using namespace modalkit::oracle;

namespace {

// Mode participation differs per location so that pseudo-damage at
// different stations moves different modes.
const double kModeShiftWeights[3][5] = {
    {2.0e-5, 1.2e-5, 0.4e-5, 0.2e-5, 0.8e-5},  // tip
    {0.3e-5, 0.8e-5, 1.6e-5, 0.9e-5, 0.4e-5},  // root
    {0.8e-5, 0.5e-5, 0.9e-5, 1.8e-5, 1.1e-5},  // center
};

int location_index(const std::string& location) {
    if (location == "tip") return 0;
    if (location == "root") return 1;
    if (location == "center") return 2;
    throw UsageError("unknown damage location: " + location);
}

ExcitationKind excitation_from_string(const std::string& kind) {
    if (kind == "burst") return ExcitationKind::burst_random;
    if (kind == "sweep_linear") return ExcitationKind::sine_sweep_linear;
    if (kind == "sweep_log") return ExcitationKind::sine_sweep_log;
    if (kind == "multisine_random") return ExcitationKind::multisine_random_phase;
    if (kind == "multisine_odd") return ExcitationKind::multisine_odd_phase;
    throw UsageError("unknown excitation kind: " + kind);
}

std::string repetition_name(int rep) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d", rep);
    return buf;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    seed ^= salt + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
}

}  // namespace

ModalParameterSet campaign_modal_model(double added_mass_g, const std::string& location) {
    const double base_freq[5] = {7.0, 17.0, 36.0, 88.0, 157.0};
    const double base_zeta[5] = {0.024, 0.006, 0.012, 0.011, 0.015};
    const double base_residue[5] = {1.0, -0.8, 0.6, -0.4, 0.5};

    std::vector<Mode> modes;
    const int loc = added_mass_g > 0.0 ? location_index(location) : 0;
    for (int r = 0; r < 5; ++r) {
        double f = base_freq[r];
        if (added_mass_g > 0.0) f *= 1.0 - added_mass_g * kModeShiftWeights[loc][r];
        modes.push_back({f, base_zeta[r], base_residue[r]});
    }
    return ModalParameterSet::from_modes(modes);
}

SyntheticSystem campaign_system(const ModalParameterSet& modal, int sensors, double noise_level,
                                std::uint64_t seed) {
    auto sys = SyntheticSystem::from_modal(modal, sensors, noise_level, seed);
    // Deterministic sensor-dependent participation; some modes fade out at
    // some stations.
    for (int s = 0; s < sensors; ++s)
        for (std::size_t r = 0; r < modal.size(); ++r)
            sys.residues(s, static_cast<Eigen::Index>(r)) =
                modal[r].residue * std::cos(0.35 * s + 0.7 * static_cast<double>(r));
    return sys;
}

Params synth_defaults() {
    return Params({
        {"campaign", "SYN"},
        {"phase", "1"},
        {"sample_rate", "0"},     // 0 -> phase default
        {"n_samples", "0"},       // 0 -> phase default
        {"repetitions", "10"},
        {"sensors", "4"},
        {"noise_level", "0.02"},
        {"excitation", "burst"},
        {"levels", "0.4"},
        {"damage", ""},           // e.g. tip:400;root:200 (location:grams)
        {"band_lo_hz", "2"},
        {"band_hi_hz", "180"},
        {"active_fraction", "0.9"},
        {"overwrite", "false"},
    });
}

int cmd_synth(const Params& params, const CommonArgs& common) {
    if (common.container_root.empty())
        throw UsageError("synth needs --container (or MODALKIT_CONTAINER)");
    Container container(common.container_root);

    const int phase = static_cast<int>(params.integer("phase"));
    if (phase != 1 && phase != 2) throw UsageError("phase must be 1 or 2");
    double fs = params.num("sample_rate");
    std::size_t n = static_cast<std::size_t>(params.integer("n_samples"));
    if (fs <= 0.0) fs = phase == 1 ? 512.0 : 2048.0;
    if (n == 0) n = phase == 1 ? 16384 : 32768;

    const int reps = static_cast<int>(params.integer("repetitions"));
    const int sensors = static_cast<int>(params.integer("sensors"));
    const double noise = params.num("noise_level");
    const bool overwrite = params.flag("overwrite");
    const auto kind = excitation_from_string(params.str("excitation"));
    const std::string phase_name = phase == 1 ? "P1" : "P2";

    // Series list: undamaged at each level, then each damage scenario.
    struct Series {
        std::string name;
        double level;
        double mass;
        std::string location;
    };
    std::vector<Series> series;
    for (double level : params.num_list("levels")) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s_%04d", params.str("excitation").c_str(),
                      static_cast<int>(std::lround(level * 1000)));
        series.push_back({buf, level, 0.0, ""});
    }
    if (!params.str("damage").empty()) {
        std::stringstream ss(params.str("damage"));
        std::string scenario;
        while (std::getline(ss, scenario, ';')) {
            const auto colon = scenario.find(':');
            if (colon == std::string::npos)
                throw UsageError("damage scenario must be location:grams, got " + scenario);
            const std::string location = scenario.substr(0, colon);
            const double mass = std::stod(scenario.substr(colon + 1));
            location_index(location);  // validate
            for (double level : params.num_list("levels")) {
                char buf[48];
                std::snprintf(buf, sizeof(buf), "ds_%s_%04d_%04d", location.c_str(),
                              static_cast<int>(std::lround(mass)),
                              static_cast<int>(std::lround(level * 1000)));
                series.push_back({buf, level, mass, location});
            }
        }
    }

    std::size_t leaves = 0;
    for (const auto& s : series) {
        const auto modal = campaign_modal_model(s.mass, s.location);
        ExcitationSpec spec;
        spec.kind = kind;
        spec.amplitude = s.level;
        spec.active_fraction = params.num("active_fraction");
        spec.band_lo_hz = params.num("band_lo_hz");
        spec.band_hi_hz = std::min(params.num("band_hi_hz"), fs / 2.0 * 0.95);
        spec.seed = mix(common.seed, std::hash<std::string>{}(s.name));
        const auto drive = generate_excitation(spec, n, fs);

        NodeMetadata series_meta;
        series_meta.set("excitation_level", s.level);
        series_meta.set("added_mass", s.mass);
        series_meta.set("damage_location", s.location.empty() ? "none" : s.location);
        series_meta.set("sample_rate", fs);
        series_meta.set("seed", static_cast<double>(spec.seed));

        std::vector<TimeSeriesRecord> input_reps;
        std::vector<std::vector<TimeSeriesRecord>> output_reps;
        for (int rep = 1; rep <= reps; ++rep) {
            auto sys = campaign_system(modal, sensors, noise,
                                       mix(spec.seed, static_cast<std::uint64_t>(rep)));
            auto outputs = simulate_response(sys, drive);
            const auto rep_name = repetition_name(rep);

            NodeMetadata force_meta = series_meta;
            force_meta.set("channel", "FRC");
            container.put(DatasetPath::leaf(params.str("campaign"), phase_name, s.name, rep_name,
                                            "FRC", "force"),
                          drive, force_meta, overwrite);
            ++leaves;
            for (int sens = 0; sens < sensors; ++sens) {
                NodeMetadata acc_meta = series_meta;
                acc_meta.set("channel", outputs[static_cast<std::size_t>(sens)].channel);
                acc_meta.set("sensitivity", 10.0);
                container.put(
                    DatasetPath::leaf(params.str("campaign"), phase_name, s.name, rep_name,
                                      "S" + repetition_name(sens + 1), "acc"),
                    outputs[static_cast<std::size_t>(sens)], acc_meta, overwrite);
                ++leaves;
            }
            input_reps.push_back(drive);
            output_reps.push_back(std::move(outputs));
        }

        // Phase-1 style averaged frequency-domain products.
        if (phase == 1) {
            auto estimates = compute_frf_records(input_reps, output_reps);
            for (int sens = 0; sens < sensors; ++sens) {
                const auto& est = estimates[static_cast<std::size_t>(sens)];
                NodeMetadata frf_meta = series_meta;
                frf_meta.set("repetitions_averaged", static_cast<double>(reps));
                container.put(DatasetPath::leaf(params.str("campaign"), phase_name, s.name, "avg",
                                                "S" + repetition_name(sens + 1), "frf"),
                              est.frf, frf_meta, overwrite);
                NodeMetadata coh_meta = frf_meta;
                coh_meta.set("degenerate", est.degenerate_coherence ? 1.0 : 0.0);
                container.put_real_spectrum(
                    DatasetPath::leaf(params.str("campaign"), phase_name, s.name, "avg",
                                      "S" + repetition_name(sens + 1), "coherenceSpectrum"),
                    est.frf.grid, *est.frf.coherence, coh_meta, overwrite);
                leaves += 2;
            }
        }
        std::printf("series %s: %d repetitions written\n", s.name.c_str(), reps);
    }
    std::printf("campaign %s/%s: %zu leaves\n", params.str("campaign").c_str(),
                phase_name.c_str(), leaves);
    return kExitOk;
}

}  // namespace modalkit::cli
