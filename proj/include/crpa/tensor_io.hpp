#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "crpa/probe.hpp"
#include "crpa/rope.hpp"

namespace crpa {

// Malformed or inconsistent external data. Callers map this to a
// distinct process exit code, separate from numeric-domain failures.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw activation dump: flat little-endian float32, row-major, with a
// JSON sidecar naming shape, dim_order and pair_layout. Values promote
// to double on read.
struct TensorDump {
  Matrix data;
  std::vector<long> shape;
  std::string dim_order = "row_major";
  std::string pair_layout = "interleaved";
};

// Sidecar defaults to path + ".json".
TensorDump read_tensor_dump(const std::string& path);
TensorDump read_tensor_dump(const std::string& path, const std::string& sidecar_path);

void write_tensor_dump(const std::string& path, const Matrix& data);

// Shortest exact decimal form of a double; reparses to the same bits.
std::string format_double(double v);

// Curve CSV: a "# crpa <version> | <provenance>" comment line, a header,
// then axis,delta,kappa,samples,timestep rows (timestep blank when unset).
void export_curves(const std::vector<DeltaCurve>& curves, std::ostream& os,
                   const std::string& provenance);
void export_curves(const std::vector<DeltaCurve>& curves, const std::string& path,
                   const std::string& provenance);

std::vector<DeltaCurve> import_curves(std::istream& is);
std::vector<DeltaCurve> import_curves(const std::string& path);

}  // namespace crpa
