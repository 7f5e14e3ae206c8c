#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmrom/manifold.hpp"
#include "qmrom/opinf.hpp"

// Binary matrix file ("QMRM"):
//   magic "QMRM" | version u32 | rows u64 | cols u64 | rows*cols f64
// All integers and floats little-endian, payload column-major.
//
// Container file ("QMDL"):
//   magic "QMDL" | version u32 | section count u32
//   per section: name length u32 | UTF-8 name | rows u64 | cols u64 | f64 payload
//   metadata count u32 | per entry: key length u32 | key | value length u32 | value
// Snapshot sets use the same container layout under the magic "QMSS".
namespace qmrom::matio {

inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::uint32_t kContainerVersion = 1;

std::string encode_matrix(const Matrix& m);
Matrix decode_matrix(std::string_view bytes);
void write_matrix_binary(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_binary(const std::filesystem::path& path);

std::string format_matrix_csv(const Matrix& m);
Matrix parse_matrix_csv(std::string_view text);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

struct Section {
  std::string name;
  Matrix data;
};

struct Container {
  std::vector<Section> sections;
  std::map<std::string, std::string> metadata;

  const Matrix* find(const std::string& name) const;
  const Matrix& require(const std::string& name) const;
  void add(std::string name, Matrix data);
};

std::string encode_container(const Container& c, std::string_view magic = "QMDL");
Container decode_container(std::string_view bytes, std::string_view magic = "QMDL");

struct StoredModel {
  QuadraticManifold manifold;
  std::optional<RomOperators> ops;
};

Container model_to_container(const QuadraticManifold& m, const RomOperators* ops);
StoredModel model_from_container(const Container& c);
void save_model(const QuadraticManifold& m, const std::optional<RomOperators>& ops,
                const std::filesystem::path& path);
StoredModel load_model(const std::filesystem::path& path);

void save_snapshots(const SnapshotSet& s, const std::filesystem::path& path);
SnapshotSet load_snapshots(const std::filesystem::path& path);

// "1:1,1:2,2:2" with 1-based indices.
std::string format_pairs(const std::vector<IndexPair>& pairs);
std::vector<IndexPair> parse_pairs(std::string_view text);

// Write to a sibling temporary file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// 17 significant digits, round-trip safe.
std::string format_double(double v);

}  // namespace qmrom::matio
