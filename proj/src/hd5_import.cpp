#include "modalkit/hd5_import.hpp"

#include <hdf5.h>

#include <cstring>
#include <sstream>
#include <vector>

namespace modalkit::dataio {

namespace {

struct HidCloser {
    hid_t id;
    herr_t (*closer)(hid_t);
    ~HidCloser() {
        if (id >= 0) closer(id);
    }
};

// Collect the attributes of an object into flat string metadata.
void read_attributes(hid_t obj, NodeMetadata& meta) {
    const int n = H5Aget_num_attrs(obj);
    for (int i = 0; i < n; ++i) {
        hid_t attr = H5Aopen_idx(obj, static_cast<unsigned>(i));
        if (attr < 0) continue;
        HidCloser ac{attr, H5Aclose};
        char name[256];
        if (H5Aget_name(attr, sizeof(name), name) < 0) continue;

        hid_t type = H5Aget_type(attr);
        HidCloser tc{type, H5Tclose};
        const H5T_class_t cls = H5Tget_class(type);
        if (cls == H5T_FLOAT || cls == H5T_INTEGER) {
            double value = 0.0;
            if (H5Aread(attr, H5T_NATIVE_DOUBLE, &value) >= 0) meta.set(name, value);
        } else if (cls == H5T_STRING) {
            if (H5Tis_variable_str(type) > 0) {
                char* str = nullptr;
                hid_t mem = H5Tcopy(H5T_C_S1);
                H5Tset_size(mem, H5T_VARIABLE);
                if (H5Aread(attr, mem, &str) >= 0 && str) {
                    meta.set(name, std::string(str));
                    H5free_memory(str);
                }
                H5Tclose(mem);
            } else {
                const std::size_t len = H5Tget_size(type);
                std::vector<char> buf(len + 1, '\0');
                hid_t mem = H5Tcopy(H5T_C_S1);
                H5Tset_size(mem, len);
                if (H5Aread(attr, mem, buf.data()) >= 0) meta.set(name, std::string(buf.data()));
                H5Tclose(mem);
            }
        }
    }
}

bool read_dataset(hid_t parent, const std::string& name, std::vector<double>& real,
                  std::vector<Complex>& cplx, bool& is_complex) {
    hid_t dset = H5Dopen2(parent, name.c_str(), H5P_DEFAULT);
    if (dset < 0) return false;
    HidCloser dc{dset, H5Dclose};

    hid_t space = H5Dget_space(dset);
    HidCloser sc{space, H5Sclose};
    const hssize_t npoints = H5Sget_simple_extent_npoints(space);
    if (npoints <= 0) return false;

    hid_t type = H5Dget_type(dset);
    HidCloser tc{type, H5Tclose};
    const H5T_class_t cls = H5Tget_class(type);

    if (cls == H5T_COMPOUND && H5Tget_nmembers(type) >= 2) {
        // Complex stored as a two-member compound (h5py convention).
        char* m0 = H5Tget_member_name(type, 0);
        char* m1 = H5Tget_member_name(type, 1);
        hid_t mem = H5Tcreate(H5T_COMPOUND, 2 * sizeof(double));
        H5Tinsert(mem, m0, 0, H5T_NATIVE_DOUBLE);
        H5Tinsert(mem, m1, sizeof(double), H5T_NATIVE_DOUBLE);
        std::vector<double> buf(static_cast<std::size_t>(npoints) * 2);
        const herr_t err = H5Dread(dset, mem, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data());
        H5Tclose(mem);
        H5free_memory(m0);
        H5free_memory(m1);
        if (err < 0) return false;
        cplx.resize(static_cast<std::size_t>(npoints));
        for (std::size_t i = 0; i < cplx.size(); ++i)
            cplx[i] = Complex(buf[2 * i], buf[2 * i + 1]);
        is_complex = true;
        return true;
    }
    if (cls == H5T_FLOAT || cls == H5T_INTEGER) {
        real.resize(static_cast<std::size_t>(npoints));
        if (H5Dread(dset, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, real.data()) < 0)
            return false;
        is_complex = false;
        return true;
    }
    return false;
}

std::string default_units(const std::string& signal) {
    if (signal == "acc") return "g";
    if (signal == "force") return "N";
    if (signal == "frf") return "g/N";
    return "-";
}

void import_leaf(hid_t group, const std::string& name, const std::vector<std::string>& segs,
                 const NodeMetadata& inherited, Container& container, bool overwrite,
                 ImportReport& report) {
    if (!is_known_signal(name)) {
        ++report.skipped;
        return;
    }
    std::vector<double> real;
    std::vector<Complex> cplx;
    bool is_complex = false;
    if (!read_dataset(group, name, real, cplx, is_complex)) {
        ++report.skipped;
        return;
    }

    NodeMetadata meta = inherited;
    {
        hid_t dset = H5Dopen2(group, name.c_str(), H5P_DEFAULT);
        if (dset >= 0) {
            HidCloser dc{dset, H5Dclose};
            read_attributes(dset, meta);
        }
    }
    if (!meta.has("units")) meta.set("units", default_units(name));

    auto segments = segs;
    segments.push_back(name);
    DatasetPath path{segments};

    try {
        if (name == "acc" || name == "force") {
            if (!meta.has("sample_rate")) {
                ++report.skipped;
                return;
            }
            TimeSeriesRecord rec(std::move(real), meta.get_double("sample_rate"),
                                 segs.empty() ? "" : segs.back(),
                                 signal_unit_from_string(meta.get("units")));
            container.put(path, rec, meta, overwrite);
        } else {
            if (!meta.has("freq_start_hz") || !meta.has("freq_spacing_hz")) {
                ++report.skipped;
                return;
            }
            const std::size_t count = is_complex ? cplx.size() : real.size();
            auto grid = FrequencyGrid::uniform(meta.get_double("freq_start_hz"),
                                               meta.get_double("freq_spacing_hz"), count);
            if (name == "coherenceSpectrum") {
                if (is_complex) {
                    ++report.skipped;
                    return;
                }
                container.put_real_spectrum(path, grid, real, meta, overwrite);
            } else {
                if (!is_complex) {
                    cplx.resize(real.size());
                    for (std::size_t i = 0; i < real.size(); ++i) cplx[i] = Complex(real[i], 0.0);
                }
                container.put_complex_spectrum(path, grid, cplx, meta, overwrite);
            }
        }
        ++report.imported;
    } catch (const DataError&) {
        ++report.skipped;
    }
}

void walk(hid_t group, std::vector<std::string>& segs, const NodeMetadata& inherited,
          Container& container, bool overwrite, ImportReport& report) {
    hsize_t count = 0;
    if (H5Gget_num_objs(group, &count) < 0) return;
    for (hsize_t i = 0; i < count; ++i) {
        char name[512];
        if (H5Gget_objname_by_idx(group, i, name, sizeof(name)) < 0) continue;
        const int type = H5Gget_objtype_by_idx(group, i);
        if (type == H5G_GROUP && segs.size() < 5) {
            hid_t child = H5Gopen2(group, name, H5P_DEFAULT);
            if (child < 0) continue;
            HidCloser gc{child, H5Gclose};
            NodeMetadata meta = inherited;
            read_attributes(child, meta);
            segs.emplace_back(name);
            walk(child, segs, meta, container, overwrite, report);
            segs.pop_back();
        } else if (type == H5G_DATASET && segs.size() == 5) {
            import_leaf(group, name, segs, inherited, container, overwrite, report);
        } else {
            ++report.skipped;
        }
    }
}

}  // namespace

ImportReport import_hd5(const std::string& hd5_path, Container& container, bool overwrite) {
    hid_t file = H5Fopen(hd5_path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT);
    if (file < 0) throw DataError("cannot open hd5 file: " + hd5_path);
    HidCloser fc{file, H5Fclose};

    hid_t root = H5Gopen2(file, "/", H5P_DEFAULT);
    if (root < 0) throw DataError("cannot open hd5 root group");
    HidCloser rc{root, H5Gclose};

    ImportReport report;
    NodeMetadata meta;
    read_attributes(root, meta);
    std::vector<std::string> segs;
    walk(root, segs, meta, container, overwrite, report);
    return report;
}

}  // namespace modalkit::dataio
