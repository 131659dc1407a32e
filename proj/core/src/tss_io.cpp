#include "aim/tss_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace aim {

void write_tss(const std::string& path, const TimeStateSet& tss) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);

  const StateGrid& g = tss.grid();
  nlohmann::json header;
  header["shape"] = g.shape();
  header["bounds"] = {
      {g.lower()[0], g.upper()[0]},
      {g.lower()[1], g.upper()[1]},
      {g.lower()[2], g.upper()[2]},
      {g.lower()[3], g.upper()[3]},
  };
  header["t0"] = tss.t0();
  header["dt"] = tss.dt();
  out << header.dump() << "\n";

  for (std::size_t k = 0; k < tss.slice_count(); ++k) {
    const auto& vals = tss.slice(k).values();
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path);
}

TimeStateSet read_tss(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("missing header line: " + path);
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded()) throw IoError("malformed header: " + path);

  std::array<int, 4> shape = header.at("shape");
  auto bounds = header.at("bounds");
  auto grid = std::make_shared<StateGrid>(
      std::array<double, 2>{bounds[0][0], bounds[0][1]},
      std::array<double, 2>{bounds[1][0], bounds[1][1]},
      std::array<double, 2>{bounds[3][0], bounds[3][1]}, shape);
  double t0 = header.at("t0");
  double dt = header.at("dt");

  std::vector<LevelSetField> slices;
  std::vector<float> buf(grid->size());
  while (in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    slices.emplace_back(grid, buf);
  }
  if (in.gcount() != 0) throw IoError("truncated slice data: " + path);
  if (slices.empty()) throw IoError("no slices in file: " + path);
  return TimeStateSet(t0, dt, std::move(slices));
}

}  // namespace aim
