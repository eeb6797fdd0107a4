#include "chronosurv/volume_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "chronosurv/errors.hpp"

namespace chronosurv {

static_assert(std::endian::native == std::endian::little,
              "volume I/O assumes a little-endian host");

namespace {

void write_payload(const std::string& path, const nlohmann::ordered_json& header,
                   const float* data, std::size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + path);
  const std::string h = header.dump();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

VolumeHeader read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing header line: " + path);
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw IoError("bad volume header JSON: " + path);
  VolumeHeader h;
  const auto dims = j.at("dims");
  for (int i = 0; i < 3; ++i) h.dims[static_cast<std::size_t>(i)] = dims.at(static_cast<std::size_t>(i)).get<int>();
  const auto sp = j.at("spacing_mm");
  for (int i = 0; i < 3; ++i) h.spacing_mm[static_cast<std::size_t>(i)] = sp.at(static_cast<std::size_t>(i)).get<double>();
  h.kind = j.at("kind").get<std::string>();
  return h;
}

std::vector<float> read_floats(std::istream& in, std::size_t count, const std::string& path) {
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
    throw IoError("short read: " + path);
  return data;
}

}  // namespace

void write_volume(const std::string& path, const Grid3& grid,
                  const std::array<double, 3>& spacing_mm, const std::string& kind) {
  nlohmann::ordered_json header;
  header["dims"] = {grid.nx, grid.ny, grid.nz};
  header["spacing_mm"] = {spacing_mm[0], spacing_mm[1], spacing_mm[2]};
  header["kind"] = kind;
  write_payload(path, header, grid.v.data(), grid.size());
}

Grid3 read_volume(const std::string& path, VolumeHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  const VolumeHeader h = read_header(in, path);
  Grid3 g(h.dims[0], h.dims[1], h.dims[2]);
  g.v = read_floats(in, g.size(), path);
  if (header != nullptr) *header = h;
  return g;
}

void write_tensor(const std::string& path, const Tensor3& t, const std::string& kind) {
  nlohmann::ordered_json header;
  header["dims"] = {t.ch, t.rows, t.cols};
  header["spacing_mm"] = {0.0, 0.0, 0.0};
  header["kind"] = kind;
  std::vector<float> data(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) data[i] = static_cast<float>(t.v[i]);
  write_payload(path, header, data.data(), data.size());
}

Tensor3 read_tensor(const std::string& path, VolumeHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  const VolumeHeader h = read_header(in, path);
  Tensor3 t(h.dims[0], h.dims[1], h.dims[2]);
  const std::vector<float> data = read_floats(in, t.size(), path);
  for (std::size_t i = 0; i < t.size(); ++i) t.v[i] = static_cast<double>(data[i]);
  if (header != nullptr) *header = h;
  return t;
}

}  // namespace chronosurv
