#pragma once

#include <string>

#include "modalkit/dataio.hpp"

namespace modalkit::dataio {

struct ImportReport {
    std::size_t imported = 0;
    std::size_t skipped = 0;  // unknown signal name or missing axis metadata
};

/// Map an hd5 file laid out as campaign/phase/series/repetition/sensor/signal
/// into the container one-to-one. Attributes at every level are inherited
/// into the leaf metadata (deeper levels win). Time-series leaves need a
/// sample_rate attribute; spectral leaves need freq_start_hz and
/// freq_spacing_hz. Available only when built against HDF5.
ImportReport import_hd5(const std::string& hd5_path, Container& container,
                        bool overwrite = false);

}  // namespace modalkit::dataio
