#include "akcy/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace akcy {

namespace {

void to_little_endian(char *bytes, std::size_t count) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < count; ++i)
      std::reverse(bytes + 8 * i, bytes + 8 * i + 8);
  }
}

} // namespace

void write_field(std::ostream &out, const TensorField<double> &f) {
  nlohmann::json header;
  const auto &g = f.grid();
  header["shape"] = {g.n(0), g.n(1), g.n(2), g.n(3), f.components()};
  nlohmann::json variance = nlohmann::json::array();
  for (Slot s : f.variance())
    variance.push_back(s == Slot::lower ? "lower" : "upper");
  header["variance"] = variance;
  header["dtype"] = "f64";
  header["order"] = "row-major";
  header["endianness"] = "little";
  header["periods"] = {g.period(0), g.period(1), g.period(2), g.period(3)};
  out << header.dump() << '\n';

  const std::size_t count = std::size_t(f.data().size());
  std::string buffer(count * 8, '\0');
  std::memcpy(buffer.data(), f.data().data(), count * 8);
  to_little_endian(buffer.data(), count);
  out.write(buffer.data(), std::streamsize(buffer.size()));
  if (!out) throw FormatError("failed writing field payload");
}

TensorField<double> read_field(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad header: ") + e.what());
  }
  if (header.value("dtype", "") != "f64" ||
      header.value("order", "") != "row-major" ||
      header.value("endianness", "") != "little")
    throw FormatError("unsupported dtype/order/endianness");
  const auto shape = header.at("shape").get<std::vector<long>>();
  if (shape.size() != 5) throw FormatError("shape must have 5 entries");
  std::array<double, 4> periods{1, 1, 1, 1};
  if (header.contains("periods")) {
    const auto p = header["periods"].get<std::vector<double>>();
    if (p.size() != 4) throw FormatError("periods must have 4 entries");
    std::copy(p.begin(), p.end(), periods.begin());
  }
  Variance variance;
  for (const auto &s : header.at("variance")) {
    const auto name = s.get<std::string>();
    if (name == "lower") variance.push_back(Slot::lower);
    else if (name == "upper") variance.push_back(Slot::upper);
    else throw FormatError("unknown slot '" + name + "'");
  }
  Grid grid({int(shape[0]), int(shape[1]), int(shape[2]), int(shape[3])},
            periods);
  if (shape[4] != pow4(int(variance.size())))
    throw FormatError("component count does not match variance rank");

  TensorField<double>::Array data(grid.size(), shape[4]);
  const std::size_t count = std::size_t(data.size());
  std::string buffer(count * 8, '\0');
  in.read(buffer.data(), std::streamsize(buffer.size()));
  if (std::size_t(in.gcount()) != buffer.size())
    throw FormatError("truncated payload");
  to_little_endian(buffer.data(), count);
  std::memcpy(data.data(), buffer.data(), buffer.size());
  return TensorField<double>(grid, std::move(variance), std::move(data));
}

void save_field(const std::string &path, const TensorField<double> &f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path);
  write_field(out, f);
}

TensorField<double> load_field(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_field(in);
}

} // namespace akcy
