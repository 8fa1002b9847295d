#pragma once

// Tables (CSV / JSON) and JSON forms of the core types.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lattice_lab/dani_transform.hpp"
#include "lattice_lab/diophantine.hpp"
#include "lattice_lab/experiments.hpp"
#include "lattice_lab/flow_dynamics.hpp"
#include "lattice_lab/lattice_core.hpp"
#include "lattice_lab/root_geometry.hpp"
#include "lattice_lab/siegel_measure.hpp"

namespace lattice_lab {

using Json = nlohmann::json;

class Table {
 public:
  using Cell = std::variant<std::int64_t, double, std::string, bool>;

  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw ValidationError("table row has the wrong number of cells");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  void write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << '\n';
    }
  }

  /// Array of row objects; non-finite doubles become null.
  Json to_json() const {
    Json out = Json::array();
    for (const auto& row : rows_) {
      Json obj = Json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                obj[columns_[i]] = std::isfinite(v) ? Json(v) : Json(nullptr);
              } else {
                obj[columns_[i]] = v;
              }
            },
            row[i]);
      }
      out.push_back(std::move(obj));
    }
    return out;
  }

  /// Shortest representation that round-trips.
  static std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  }

 private:
  static std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) return format_double(v);
          else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
          else if constexpr (std::is_same_v<T, std::string>) {
            if (v.find_first_of(",\"\n") == std::string::npos) return v;
            std::string q = "\"";
            for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
          } else {
            return std::to_string(v);
          }
        },
        c);
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

// ---------------------------------------------------------------------------
// JSON forms.

inline Json basis_to_json(const LatticeBasis& b) {
  Json rows = Json::array();
  for (int i = 0; i < b.dim(); ++i)
    for (int j = 0; j < b.dim(); ++j) rows.push_back(b.cols()(i, j));
  return Json{{"dim", b.dim()}, {"basis", rows}};
}

inline LatticeBasis basis_from_json(const Json& j) {
  const int k = j.at("dim").get<int>();
  const auto& xs = j.at("basis");
  if (k < 2 || k > kMaxDim || !xs.is_array() || xs.size() != static_cast<std::size_t>(k * k))
    throw ValidationError("basis JSON needs dim in [2, 6] and dim^2 row-major entries");
  Matrix m(k, k);
  for (int i = 0; i < k; ++i)
    for (int c = 0; c < k; ++c) m(i, c) = xs.at(static_cast<std::size_t>(i * k + c)).get<double>();
  return LatticeBasis(m);
}

inline Json flow_to_json(const DiagonalFlow& f) {
  Json xs = Json::array();
  for (Eigen::Index i = 0; i < f.exponents().size(); ++i) xs.push_back(f.exponents()(i));
  return Json{{"exponents", xs}};
}

inline DiagonalFlow flow_from_json(const Json& j) {
  const auto xs = j.at("exponents").get<std::vector<double>>();
  Vector a(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) a(static_cast<Eigen::Index>(i)) = xs[i];
  return DiagonalFlow(a);
}

inline Json sampler_to_json(const LatticeSampler& s) {
  return Json{{"dim", s.dim()}, {"mode", s.label()}, {"seed", s.seed()}};
}

inline LatticeSampler sampler_from_json(const Json& j) {
  return LatticeSampler(j.at("dim").get<int>(), parse_sampler_mode(j.at("mode").get<std::string>()),
                        j.at("seed").get<std::uint64_t>());
}

/// Experiment configuration as stored in a JSON config file: the subcommand
/// plus option values keyed by their long CLI names.
struct ExperimentConfig {
  std::string subcommand;
  Json options = Json::object();

  static ExperimentConfig from_json(const Json& j) {
    if (!j.is_object() || !j.contains("subcommand")) throw ValidationError("config JSON needs a \"subcommand\" field");
    ExperimentConfig c;
    c.subcommand = j.at("subcommand").get<std::string>();
    for (const auto& [key, value] : j.items()) {
      if (key == "subcommand") continue;
      if (value.is_number() && value.get<double>() < 0.0) throw ValidationError("config field '" + key + "' must be >= 0");
      c.options[key] = value;
    }
    return c;
  }

  /// argv-style tokens: subcommand words, then --key value pairs (arrays repeat the key).
  std::vector<std::string> to_args() const {
    std::vector<std::string> out;
    std::string word;
    for (char ch : subcommand + " ") {
      if (ch == ' ') {
        if (!word.empty()) out.push_back(word);
        word.clear();
      } else {
        word += ch;
      }
    }
    const auto scalar = [](const Json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      if (v.is_number_integer()) return v.dump();
      if (v.is_number()) return Table::format_double(v.get<double>());
      throw ValidationError("config values must be scalars or arrays of scalars");
    };
    for (const auto& [key, value] : options.items()) {
      if (value.is_array()) {
        for (const auto& v : value) {
          out.push_back("--" + key);
          out.push_back(scalar(v));
        }
      } else if (value.is_boolean()) {
        if (value.get<bool>()) out.push_back("--" + key);
      } else {
        out.push_back("--" + key);
        out.push_back(scalar(value));
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Table builders.

inline Table tail_table(const TailEstimate& est) {
  Table t({"z", "phi_hat", "ci", "upper_bound", "lower_bound", "hits", "scored", "sampler"});
  const auto c = tail_constants(est.k);
  for (std::size_t i = 0; i < est.z.size(); ++i)
    t.add({est.z[i], est.phi_hat[i], est.ci[i], tail_upper(c, est.z[i]), tail_lower(c, est.z[i]),
           static_cast<std::int64_t>(est.hits[i]), est.scored(i), est.sampler});
  return t;
}

inline Table rate_table(const RateFunction& r, const std::vector<double>& ts) {
  Table t({"t", "r", "lambda", "L"});
  for (double x : ts) t.add({x, r(x), r.lambda(x), r.big_l(x)});
  return t;
}

inline Table psi_table(const PsiFunction& psi, const std::vector<double>& lambdas) {
  Table t({"lambda", "x", "neg_log_psi", "psi", "extrapolated"});
  for (double l : lambdas) {
    const double x = std::exp(l);
    t.add({l, x, psi.neg_log(l), std::exp(-psi.neg_log(l)), psi.is_extrapolated(x)});
  }
  return t;
}

namespace detail {
inline std::vector<std::string> coord_columns(const std::string& prefix, int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}
}  // namespace detail

inline Table witness_table(const std::vector<RationalWitness>& ws, int m, int n) {
  auto cols = detail::coord_columns("q", n);
  for (const auto& c : detail::coord_columns("p", m)) cols.push_back(c);
  for (const char* c : {"q_norm", "residual_norm", "slack", "exact"}) cols.emplace_back(c);
  Table t(cols);
  for (const auto& w : ws) {
    std::vector<Table::Cell> row;
    for (Eigen::Index i = 0; i < w.q.size(); ++i) row.emplace_back(w.q(i));
    for (Eigen::Index i = 0; i < w.p.size(); ++i) row.emplace_back(w.p(i));
    row.insert(row.end(), {w.q_norm, w.residual_norm, w.slack, w.residual_norm == 0.0});
    t.add(std::move(row));
  }
  return t;
}

inline Table witness_table(const std::vector<ApproxWitness>& ws, int k) {
  auto cols = detail::coord_columns("c", k);
  for (const char* c : {"norm", "upper_norm", "lower_norm", "slack", "upper_zero"}) cols.emplace_back(c);
  Table t(cols);
  for (const auto& w : ws) {
    std::vector<Table::Cell> row;
    for (Eigen::Index i = 0; i < w.v.coords.size(); ++i) row.emplace_back(w.v.coords(i));
    row.insert(row.end(), {w.v.norm_value, w.upper_norm, w.lower_norm, w.slack, w.upper_zero});
    t.add(std::move(row));
  }
  return t;
}

inline Table witness_table(const std::vector<MAWitness>& ws, int k) {
  auto cols = detail::coord_columns("c", k);
  for (const char* c : {"norm", "product", "slack", "has_zero"}) cols.emplace_back(c);
  Table t(cols);
  for (const auto& w : ws) {
    std::vector<Table::Cell> row;
    for (Eigen::Index i = 0; i < w.v.coords.size(); ++i) row.emplace_back(w.v.coords(i));
    row.insert(row.end(), {w.v.norm_value, w.product, w.slack, w.has_zero});
    t.add(std::move(row));
  }
  return t;
}

inline Table roots_csv_table(int n) {
  Table t({"i", "k_i", "weight_norm_sq", "ratio", "closed_form_k"});
  const double k = dl_exponent(n);
  for (const auto& r : roots_table(n)) t.add({static_cast<std::int64_t>(r.i), r.k_i, r.weight_norm_sq, r.ratio, k});
  return t;
}

inline Table bc_table(const BCReport& rep) {
  Table t({"N", "S_N", "E_N", "ratio", "residual", "sampler"});
  for (const auto& r : rep.rows) t.add({static_cast<std::int64_t>(r.n), static_cast<std::int64_t>(r.s), r.e, r.ratio, r.residual, rep.sampler});
  return t;
}

inline Table bc_variance_table(const BCVarianceReport& rep) {
  Table t({"M", "N", "mean_sum", "variance", "sum_mu", "ratio", "shuffled", "sampler"});
  for (const auto& r : rep.rows)
    t.add({static_cast<std::int64_t>(r.m), static_cast<std::int64_t>(r.n), r.mean_sum, r.variance, r.sum_mu, r.ratio,
           rep.shuffled, rep.sampler});
  return t;
}

inline Table loglaw_table(const LogLawReport& rep) {
  Table t({"T", "running_max", "sampler"});
  for (const auto& [T, m] : rep.curve) t.add({static_cast<std::int64_t>(T), m, rep.sampler});
  return t;
}

inline Table khinchin_table(const KhinchinReport& rep) {
  Table t({"Q", "mean_count"});
  for (const auto& [q, c] : rep.mean_count_at) t.add({q, c});
  return t;
}

inline Table skriganov_table(const SkriganovReport& rep) {
  Table t({"q", "R", "median_count", "growth_fraction", "stagnation_fraction", "sampler"});
  for (const auto& row : rep.rows)
    for (std::size_t i = 0; i < rep.ladder.size(); ++i)
      t.add({row.q, rep.ladder[i], row.median_counts[i], row.growth_fraction, row.stagnation_fraction, rep.sampler});
  return t;
}

inline Table mixing_table(const MixingReport& rep) {
  Table t({"t", "abs_covariance", "sampler", "note"});
  for (const auto& [time, c] : rep.correlation) t.add({time, c, rep.sampler, rep.note});
  return t;
}

}  // namespace lattice_lab
