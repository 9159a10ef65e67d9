#pragma once

#include <cstdint>
#include <string>

#include "config.hpp"
#include "modalkit/dataio.hpp"
#include "modalkit/oracle.hpp"

namespace modalkit::cli {

// Exit-code taxonomy shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitConditioning = 4;
inline constexpr int kExitNoConvergence = 5;

struct CommonArgs {
    std::string container_root;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
};

Params synth_defaults();
Params identify_defaults();
Params control_defaults();
Params shm_defaults();

int cmd_synth(const Params& params, const CommonArgs& common);
int cmd_identify(const Params& params, const CommonArgs& common);
int cmd_control(const Params& params, const CommonArgs& common);
int cmd_shm(const Params& params, const CommonArgs& common);

/// Reference modal model used by synthetic campaigns: five modes spread
/// over the identification bandwidth, with pseudo-damage applied as
/// location-weighted frequency shifts per gram of added mass.
ModalParameterSet campaign_modal_model(double added_mass_g, const std::string& location);

/// Per-sensor mode participation for the campaign model.
oracle::SyntheticSystem campaign_system(const ModalParameterSet& modal, int sensors,
                                        double noise_level, std::uint64_t seed);

}  // namespace modalkit::cli
