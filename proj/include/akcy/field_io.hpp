#pragma once

#include <iosfwd>
#include <string>

#include "akcy/tensor_field.hpp"

namespace akcy {

/// Field dump: one JSON header line
///   {"shape":[n1,n2,n3,n4,C],"variance":[...],"dtype":"f64",
///    "order":"row-major","endianness":"little","periods":[...]}
/// followed by the raw little-endian doubles in row-major order over
/// (grid indices, component index).
void write_field(std::ostream &out, const TensorField<double> &f);
TensorField<double> read_field(std::istream &in);

void save_field(const std::string &path, const TensorField<double> &f);
TensorField<double> load_field(const std::string &path);

} // namespace akcy
