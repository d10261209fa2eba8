#pragma once

#include <filesystem>

#include "hazebayes/image.hpp"

namespace hazebayes {

// Loads an 8- or 16-bit PNG, PPM (P6) or PGM (P5), dispatching on the file's
// magic bytes. Intensities are divided by the format maximum, so the result
// lies in [0, 1]. Distinct failures raise distinct types: IoError for
// filesystem problems, FormatError for corrupt headers or unsupported depth.
ImageTensor load_image(const std::filesystem::path& path);

// Saves as 8-bit PNG (.png) or binary PPM/PGM (anything else), quantizing
// with round-to-nearest. load(save(t)) differs from t by at most 1/510
// per element when t is within [0, 1].
void save_image(const ImageTensor& t, const std::filesystem::path& path);

// Portable Float Map. "Pf" is single channel, "PF" three channels; a
// negative scale field marks little-endian payloads; scanlines are stored
// bottom-to-top. Round trips are bit-exact at 32-bit float precision.
ImageTensor load_pfm(const std::filesystem::path& path);
void save_pfm(const ImageTensor& t, const std::filesystem::path& path);

}  // namespace hazebayes
