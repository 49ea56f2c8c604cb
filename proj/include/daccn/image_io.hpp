#pragma once

#include <string>

#include "daccn/tensor.hpp"

namespace daccn {

/// Binary 8-bit PPM (P6, maxval 255) from [3,H,W] or [1,3,H,W] values in [0,1].
/// Values are clamped and rounded to the nearest level.
void write_ppm(const std::string& path, const Tensor& image);
// Returns [3,H,W] with values level / 255.
Tensor read_ppm(const std::string& path);

/// Greyscale PFM ("Pf", scale -1.0, little-endian float32, bottom row first)
/// from [H,W], [1,H,W] or [1,1,H,W].
void write_pfm(const std::string& path, const Tensor& map);
// Returns [1,1,H,W].
Tensor read_pfm(const std::string& path);

}  // namespace daccn
