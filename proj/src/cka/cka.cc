/*
 * Copyright 2026 The xattr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "xattr/cka/cka.h"

#include <Eigen/Dense>
#include <cmath>
#include <nlohmann/json.hpp>
#include <string>

#include "xattr/core/io.h"
#include "xattr/core/util.h"

namespace xattr::cka {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd centered(const RepresentationBatch& batch) {
  Eigen::MatrixXd m = Eigen::Map<const RowMatrix>(
      batch.values.data(), Eigen::Index(batch.rows()),
      Eigen::Index(batch.dims));
  m.rowwise() -= m.colwise().mean();
  return m;
}

}  // namespace

void RepresentationBatch::validate() const {
  if (values.size() != ids.size() * dims) {
    throw DataError("representation batch shape mismatch");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("non-finite representation value");
  }
}

RepresentationBatch RepresentationBatch::select(
    std::span<const std::size_t> rows) const {
  RepresentationBatch out;
  out.language = language;
  out.dims = dims;
  out.ids.reserve(rows.size());
  out.values.reserve(rows.size() * dims);
  for (std::size_t r : rows) {
    if (r >= this->rows()) throw std::out_of_range("row out of range");
    out.ids.push_back(ids[r]);
    const auto source = row(r);
    out.values.insert(out.values.end(), source.begin(), source.end());
  }
  return out;
}

std::optional<double> linear_cka(const RepresentationBatch& x,
                                 const RepresentationBatch& y) {
  if (x.rows() != y.rows()) throw DataError("CKA batches differ in size");
  if (x.rows() < 2) throw DataError("CKA needs at least two rows");
  const Eigen::MatrixXd cx = centered(x);
  const Eigen::MatrixXd cy = centered(y);
  const double xx = (cx.transpose() * cx).norm();
  const double yy = (cy.transpose() * cy).norm();
  if (!(xx > 0.0) || !(yy > 0.0)) return std::nullopt;
  const double xy = (cy.transpose() * cx).squaredNorm();
  return xy / (xx * yy);
}

MatchingResult batch_matching_accuracy(const RepresentationBatch& source,
                                       const RepresentationBatch& target,
                                       const MatchingOptions& options) {
  const std::size_t n = options.batch_size;
  const std::size_t k = options.random_batches;
  if (n < 2) throw std::invalid_argument("batch size must be at least 2");
  if (source.rows() != target.rows()) {
    throw DataError("source and target representations differ in count");
  }
  for (std::size_t i = 0; i < source.rows(); ++i) {
    if (source.ids[i] != target.ids[i]) {
      throw DataError("representation ids are not paired at row " +
                      std::to_string(i));
    }
  }
  if (target.rows() < n * (k + 1)) {
    throw DataError("need at least " + std::to_string(n * (k + 1)) +
                    " paired instances, got " + std::to_string(target.rows()));
  }

  const std::size_t batches = source.rows() / n;
  std::vector<char> won(batches, 0);
  parallel_for(
      batches,
      [&](std::size_t b) {
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = b * n + i;
        const RepresentationBatch xs = source.select(rows);
        const std::optional<double> matching =
            linear_cka(xs, target.select(rows));
        if (!matching) return;

        // Candidates are every target row outside the matching batch.
        std::vector<std::size_t> pool;
        pool.reserve(target.rows() - n);
        for (std::size_t r = 0; r < target.rows(); ++r) {
          if (r / n != b) pool.push_back(r);
        }
        Rng rng(instance_seed(options.seed, "batch\x1f" + std::to_string(b)));
        for (std::size_t trial = 0; trial < k; ++trial) {
          // Partial Fisher-Yates: the first n entries become the sample.
          for (std::size_t i = 0; i < n; ++i) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
          }
          const std::optional<double> other = linear_cka(
              xs, target.select(std::span(pool.data(), n)));
          if (other && !(*matching > *other)) return;
        }
        won[b] = 1;
      },
      options.threads == 0 ? configured_threads() : options.threads);

  MatchingResult result;
  result.batches = batches;
  for (char w : won) result.wins += w != 0;
  result.accuracy = batches == 0 ? 0.0 : double(result.wins) / double(batches);
  return result;
}

RepresentationBatch hidden_representations(
    const model::ModelParams& params, std::span<const TokenizedPair> pairs,
    const std::string& language) {
  RepresentationBatch out;
  out.language = language;
  out.dims = std::size_t(params.dims.hidden);
  out.ids.resize(pairs.size());
  out.values.resize(pairs.size() * out.dims);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const model::ForwardTrace trace = model::forward(params, pairs[i]);
    out.ids[i] = pairs[i].id;
    std::copy(trace.hidden.begin(), trace.hidden.end(),
              out.values.begin() + std::ptrdiff_t(i * out.dims));
  });
  return out;
}

RepresentationBatch parse_representations_text(std::string_view text,
                                               const std::string& language) {
  RepresentationBatch out;
  out.language = language;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = " at line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const auto vec = j.at("vector").get<std::vector<double>>();
      if (out.ids.empty()) {
        if (vec.empty()) throw DataError("empty vector" + where);
        out.dims = vec.size();
      } else if (vec.size() != out.dims) {
        throw DataError("vector length mismatch" + where);
      }
      out.ids.push_back(j.at("id").get<std::string>());
      out.values.insert(out.values.end(), vec.begin(), vec.end());
    } catch (const nlohmann::json::exception&) {
      throw DataError("malformed representation" + where);
    }
  }
  if (out.ids.empty()) throw DataError("no representations found");
  out.validate();
  return out;
}

RepresentationBatch parse_representations(const std::filesystem::path& path,
                                          const std::string& language) {
  return parse_representations_text(read_file(path), language);
}

std::string format_representations(const RepresentationBatch& batch) {
  std::string out;
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    out += "{\"id\":";
    out += nlohmann::json(batch.ids[i]).dump();
    out += ",\"vector\":[";
    const auto row = batch.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d > 0) out += ',';
      out += format_double(row[d]);
    }
    out += "]}\n";
  }
  return out;
}

}  // namespace xattr::cka
