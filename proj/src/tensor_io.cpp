#include "crpa/tensor_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crpa/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "dump format is little-endian; big-endian hosts are not supported");

namespace crpa {

namespace {

nlohmann::json load_sidecar(const std::string& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw IngestError("cannot open sidecar " + sidecar_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("malformed sidecar " + sidecar_path + ": " + e.what());
  }
  return j;
}

}  // namespace

TensorDump read_tensor_dump(const std::string& path) {
  return read_tensor_dump(path, path + ".json");
}

TensorDump read_tensor_dump(const std::string& path, const std::string& sidecar_path) {
  const nlohmann::json j = load_sidecar(sidecar_path);
  TensorDump dump;
  try {
    dump.shape = j.at("shape").get<std::vector<long>>();
    if (j.contains("dim_order")) dump.dim_order = j.at("dim_order").get<std::string>();
    if (j.contains("pair_layout")) dump.pair_layout = j.at("pair_layout").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("malformed sidecar " + sidecar_path + ": " + e.what());
  }
  if (dump.dim_order != "row_major") {
    throw IngestError("unsupported dim_order \"" + dump.dim_order + "\"");
  }
  if (dump.pair_layout != "interleaved") {
    throw IngestError("unsupported pair_layout \"" + dump.pair_layout + "\"");
  }
  if (dump.shape.empty() || dump.shape.size() > 2) {
    throw IngestError("dump shape must have rank 1 or 2");
  }
  long rows = 1, cols = dump.shape[0];
  if (dump.shape.size() == 2) {
    rows = dump.shape[0];
    cols = dump.shape[1];
  }
  if (rows <= 0 || cols <= 0) throw IngestError("dump shape must be positive");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open dump " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  const long long expect = static_cast<long long>(rows) * cols;
  if (bytes != expect * static_cast<long long>(sizeof(float))) {
    throw IngestError("byte count mismatch: sidecar shape needs " + std::to_string(expect) +
                      " float32 values, file holds " +
                      std::to_string(bytes / static_cast<long long>(sizeof(float))));
  }
  std::vector<float> raw(static_cast<std::size_t>(expect));
  in.read(reinterpret_cast<char*>(raw.data()), expect * sizeof(float));
  if (!in) throw IngestError("short read on dump " + path);

  dump.data.resize(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      dump.data(r, c) = raw[static_cast<std::size_t>(r) * cols + c];
    }
  }
  return dump;
}

void write_tensor_dump(const std::string& path, const Matrix& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot open dump " + path + " for writing");
  std::vector<float> raw(static_cast<std::size_t>(data.rows() * data.cols()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      raw[static_cast<std::size_t>(r * data.cols() + c)] = static_cast<float>(data(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  nlohmann::json j;
  j["shape"] = {data.rows(), data.cols()};
  j["dim_order"] = "row_major";
  j["pair_layout"] = "interleaved";
  std::ofstream side(path + ".json");
  if (!side) throw IngestError("cannot open sidecar " + path + ".json for writing");
  side << j.dump(2) << "\n";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void export_curves(const std::vector<DeltaCurve>& curves, std::ostream& os,
                   const std::string& provenance) {
  os << "# crpa " << kVersion;
  if (!provenance.empty()) os << " | " << provenance;
  os << "\n";
  os << "axis,delta,kappa,samples,timestep\n";
  for (const DeltaCurve& c : curves) {
    for (Eigen::Index i = 0; i < c.deltas.size(); ++i) {
      os << c.axis << ',' << format_double(c.deltas[i]) << ',' << format_double(c.means[i]) << ','
         << c.sample_count << ',';
      if (c.timestep) os << *c.timestep;
      os << "\n";
    }
  }
}

void export_curves(const std::vector<DeltaCurve>& curves, const std::string& path,
                   const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot open " + path + " for writing");
  export_curves(curves, out, provenance);
}

std::vector<DeltaCurve> import_curves(std::istream& is) {
  std::vector<DeltaCurve> curves;
  std::string line;
  bool header_seen = false;
  char cur_axis = 0;
  std::optional<int> cur_timestep;
  bool have_curve = false;
  std::vector<double> deltas, means;
  int samples = 0;

  auto flush = [&] {
    if (!have_curve) return;
    DeltaCurve c;
    c.axis = cur_axis;
    c.deltas = Eigen::Map<const Vector>(deltas.data(), static_cast<Eigen::Index>(deltas.size()));
    c.means = Eigen::Map<const Vector>(means.data(), static_cast<Eigen::Index>(means.size()));
    c.sample_count = samples;
    c.timestep = cur_timestep;
    curves.push_back(std::move(c));
    deltas.clear();
    means.clear();
    have_curve = false;
  };

  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("axis,", 0) != 0) throw IngestError("expected curve header row");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string axis_s, delta_s, kappa_s, samples_s, timestep_s;
    if (!std::getline(ss, axis_s, ',') || !std::getline(ss, delta_s, ',') ||
        !std::getline(ss, kappa_s, ',') || !std::getline(ss, samples_s, ',')) {
      throw IngestError("malformed curve row: " + line);
    }
    std::getline(ss, timestep_s, ',');
    if (axis_s.size() != 1) throw IngestError("malformed axis tag: " + axis_s);
    std::optional<int> ts;
    if (!timestep_s.empty()) ts = std::stoi(timestep_s);
    const int n = std::stoi(samples_s);
    if (!have_curve || axis_s[0] != cur_axis || ts != cur_timestep || n != samples) {
      flush();
      cur_axis = axis_s[0];
      cur_timestep = ts;
      samples = n;
      have_curve = true;
    }
    deltas.push_back(std::stod(delta_s));
    means.push_back(std::stod(kappa_s));
  }
  flush();
  if (!header_seen) throw IngestError("curve file has no header row");
  return curves;
}

std::vector<DeltaCurve> import_curves(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return import_curves(in);
}

}  // namespace crpa
