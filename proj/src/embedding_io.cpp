#include "kgc/skipgram.hpp"

#include "binary_io.hpp"

#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace kgc {

namespace {
constexpr char kMagic[5] = "KGCE";
}

void save_embeddings_text(const EmbeddingMatrix& model, std::ostream& out) {
  out << model.size() << ' ' << model.dim() << '\n';
  for (std::size_t i = 0; i < model.size(); ++i) {
    out << model.labels[i];
    for (Eigen::Index j = 0; j < model.center.cols(); ++j)
      out << ' ' << format_double(model.center(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  if (!out) throw Error("failed writing embeddings");
}

EmbeddingMatrix load_embeddings_text(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw DataError("empty embedding file");
  std::istringstream header(line);
  std::size_t n = 0, d = 0;
  if (!(header >> n >> d) || d == 0) throw ParseError(line_no, "expected `N D` header");

  std::vector<std::string> labels;
  labels.reserve(n);
  RowMatrixXd center(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing embedding row");
    const char* cursor = line.c_str();
    const char* space = std::strchr(cursor, ' ');
    if (!space) throw ParseError(line_no, "embedding row has no values");
    labels.emplace_back(cursor, space);
    cursor = space;
    for (std::size_t j = 0; j < d; ++j) {
      char* end = nullptr;
      const double value = std::strtod(cursor, &end);
      if (end == cursor) throw ParseError(line_no, "expected " + std::to_string(d) + " values");
      center(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      cursor = end;
    }
    while (*cursor == ' ' || *cursor == '\r') ++cursor;
    if (*cursor != '\0') throw ParseError(line_no, "trailing data after " + std::to_string(d) + " values");
  }
  return EmbeddingMatrix(std::move(labels), std::move(center));
}

void save_embeddings_binary(const EmbeddingMatrix& model, std::ostream& out, bool include_context) {
  using namespace detail;
  const bool context = include_context && model.has_context();
  write_header(out, kMagic, kEmbeddingVersion);
  write_pod<std::uint64_t>(out, model.size());
  write_pod<std::uint64_t>(out, model.dim());
  write_pod<std::uint8_t>(out, context ? 1 : 0);
  write_strings(out, model.labels);
  write_array(out, model.center.data(), static_cast<std::size_t>(model.center.size()));
  if (context) write_array(out, model.context.data(), static_cast<std::size_t>(model.context.size()));
  if (!out) throw Error("failed writing embeddings");
}

EmbeddingMatrix load_embeddings_binary(std::istream& in, std::size_t expected_dim) {
  using namespace detail;
  read_header(in, kMagic, kEmbeddingVersion, "embedding");
  const auto n = read_pod<std::uint64_t>(in, "row count");
  const auto d = read_pod<std::uint64_t>(in, "dimension");
  const auto context = read_pod<std::uint8_t>(in, "context flag");
  if (expected_dim != 0 && d != expected_dim)
    throw DataError("embedding dimension mismatch: file has " + std::to_string(d) + ", expected " +
                    std::to_string(expected_dim));
  auto labels = read_strings(in, "labels");
  if (labels.size() != n) throw DataError("embedding label count does not match header");
  if (n * d > (1ULL << 36)) throw DataError("implausible embedding size");
  RowMatrixXd center(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  read_array(in, center.data(), static_cast<std::size_t>(center.size()), "center vectors");
  RowMatrixXd ctx;
  if (context) {
    ctx.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    read_array(in, ctx.data(), static_cast<std::size_t>(ctx.size()), "context vectors");
  }
  return EmbeddingMatrix(std::move(labels), std::move(center), std::move(ctx));
}

}  // namespace kgc
