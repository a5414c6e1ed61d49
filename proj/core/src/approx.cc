#include "mrfattn/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mrfattn/csv.hpp"

namespace mrfattn {

std::vector<double> entropy(const EdgePosterior& p) {
  std::vector<double> h;
  h.reserve(p.size());
  for (const Vec& row : p.rows) {
    double s = 0.0;
    for (double x : row) {
      if (x > 0.0) s -= x * std::log(x);
    }
    h.push_back(std::max(s, 0.0));
  }
  return h;
}

std::vector<double> kl_information_loss(const EdgePosterior& p, const EdgePosterior& q) {
  if (p.size() != q.size()) throw std::invalid_argument("posteriors have different numbers of edge variables");
  std::vector<double> out;
  out.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != q[i].size()) throw std::invalid_argument("posterior rows have different lengths");
    double s = 0.0;
    for (Eigen::Index c = 0; c < p[i].size(); ++c) {
      const double qc = q[i][c];
      if (qc <= 0.0) continue;
      if (p[i][c] <= 0.0) {
        s = std::numeric_limits<double>::infinity();
        break;
      }
      s += qc * (std::log(qc) - std::log(p[i][c]));
    }
    out.push_back(s);
  }
  return out;
}

EdgePosterior topk_approx(const EdgePosterior& p, std::size_t k) {
  EdgePosterior q;
  for (const Vec& row : p.rows) {
    const auto n = static_cast<std::size_t>(row.size());
    if (k < 1 || k > n) {
      throw std::invalid_argument("top-k needs 1 <= k <= " + std::to_string(n) + ", got " + std::to_string(k));
    }
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return row[a] > row[b]; });
    Vec out = Vec::Zero(row.size());
    double kept = 0.0;
    for (std::size_t r = 0; r < k; ++r) kept += row[order[r]];
    for (std::size_t r = 0; r < k; ++r) out[order[r]] = row[order[r]] / kept;
    q.rows.push_back(std::move(out));
  }
  return q;
}

std::vector<std::size_t> sample_config(const EdgePosterior& p, SeededRng& rng) {
  std::vector<std::size_t> config;
  config.reserve(p.size());
  for (const Vec& row : p.rows) config.push_back(rng.categorical(row));
  return config;
}

HardSample hard_sample(const PairwiseMRF& mrf, const EdgePosterior& p, const ValueSpec& values,
                       SeededRng& rng) {
  if (p.size() != mrf.edge_vars().size()) throw std::invalid_argument("posterior does not match the model");
  HardSample s;
  s.config = sample_config(p, rng);
  for (std::size_t i = 0; i < s.config.size(); ++i) {
    s.outputs.push_back(edge_value(mrf, values, mrf.edge_vars()[i].candidates()[s.config[i]]));
  }
  return s;
}

EdgePosterior point_mass(const EdgePosterior& shape, const std::vector<std::size_t>& config) {
  EdgePosterior q;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    Vec row = Vec::Zero(shape[i].size());
    row[static_cast<Eigen::Index>(config.at(i))] = 1.0;
    q.rows.push_back(std::move(row));
  }
  return q;
}

std::vector<Estimate> expected_hard_loss(const EdgePosterior& p, std::size_t num_samples, SeededRng& rng) {
  if (num_samples < 1) throw std::invalid_argument("num_samples must be at least 1");
  std::vector<double> sum(p.size(), 0.0), sum_sq(p.size(), 0.0);
  for (std::size_t s = 0; s < num_samples; ++s) {
    const auto config = sample_config(p, rng);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double loss = -std::log(p[i][static_cast<Eigen::Index>(config[i])]);
      sum[i] += loss;
      sum_sq[i] += loss * loss;
    }
  }
  const auto n = static_cast<double>(num_samples);
  std::vector<Estimate> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    Estimate e;
    e.mean = sum[i] / n;
    if (num_samples > 1) {
      const double var = std::max(0.0, (sum_sq[i] - n * e.mean * e.mean) / (n - 1.0));
      e.std_error = std::sqrt(var / n);
    }
    out.push_back(e);
  }
  return out;
}

std::string ApproxMethod::name() const {
  switch (kind) {
    case Kind::soft: return "soft";
    case Kind::hard: return "hard";
    case Kind::topk: return "top" + std::to_string(k);
  }
  return "?";
}

ApproxMethod ApproxMethod::parse(const std::string& s) {
  if (s == "soft") return {Kind::soft, 0};
  if (s == "hard") return {Kind::hard, 0};
  if (s.size() > 3 && s.compare(0, 3, "top") == 0 &&
      std::all_of(s.begin() + 3, s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return {Kind::topk, static_cast<std::size_t>(std::stoul(s.substr(3)))};
  }
  throw std::invalid_argument("unknown approximation method '" + s + "' (expected soft, hard or top<k>)");
}

namespace {

double frobenius_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

ApproxReport compare(const PairwiseMRF& mrf, const ValueSpec& values, const std::vector<ApproxMethod>& methods,
                     SeededRng& rng, std::size_t num_samples) {
  const EdgePosterior p = edge_posterior(mrf);
  const std::vector<Vec> soft = attend(mrf, values);
  const std::size_t m = p.size();

  // W_V x_source for every candidate, evaluated once
  std::vector<std::vector<Vec>> cand_values(m);
  std::size_t total_candidates = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (const Edge& e : mrf.edge_vars()[i].candidates()) cand_values[i].push_back(edge_value(mrf, values, e));
    total_candidates += cand_values[i].size();
  }
  auto expectation = [&](const EdgePosterior& q) {
    std::vector<Vec> out;
    for (std::size_t i = 0; i < m; ++i) {
      Vec acc = Vec::Zero(values.w_v.rows());
      for (std::size_t c = 0; c < cand_values[i].size(); ++c) {
        const double w = q[i][static_cast<Eigen::Index>(c)];
        if (w != 0.0) acc += w * cand_values[i][c];
      }
      out.push_back(std::move(acc));
    }
    return out;
  };

  ApproxReport report;
  report.entropy_p = entropy(p);
  for (const ApproxMethod& method : methods) {
    MethodReport r;
    r.method = method;
    switch (method.kind) {
      case ApproxMethod::Kind::soft:
        r.kl_per_edge_var = kl_information_loss(p, p);
        r.output_error = frobenius_distance(expectation(p), soft);
        r.cost_proxy = 2 * total_candidates;
        break;
      case ApproxMethod::Kind::topk: {
        const EdgePosterior q = topk_approx(p, method.k);
        r.kl_per_edge_var = kl_information_loss(p, q);
        r.output_error = frobenius_distance(expectation(q), soft);
        r.cost_proxy = total_candidates + m * method.k;
        break;
      }
      case ApproxMethod::Kind::hard: {
        if (num_samples < 1) throw std::invalid_argument("hard attention needs at least one sample");
        std::vector<double> loss(m, 0.0);
        double err = 0.0;
        std::vector<Vec> hard(m);
        for (std::size_t s = 0; s < num_samples; ++s) {
          const auto config = sample_config(p, rng);
          for (std::size_t i = 0; i < m; ++i) {
            loss[i] -= std::log(p[i][static_cast<Eigen::Index>(config[i])]);
            hard[i] = cand_values[i][config[i]];
          }
          err += frobenius_distance(hard, soft);
        }
        for (double& l : loss) l /= static_cast<double>(num_samples);
        r.kl_per_edge_var = std::move(loss);
        r.output_error = err / static_cast<double>(num_samples);
        r.cost_proxy = total_candidates + m;
        break;
      }
    }
    report.methods.push_back(std::move(r));
  }
  return report;
}

void write_report_csv(std::ostream& os, const ApproxReport& report) {
  for (const MethodReport& r : report.methods) {
    for (std::size_t i = 0; i < r.kl_per_edge_var.size(); ++i) {
      os << i << ',' << r.method.name() << ',' << format_double(r.kl_per_edge_var[i]) << ','
         << format_double(report.entropy_p[i]) << ',' << format_double(r.output_error) << ',' << r.cost_proxy
         << '\n';
    }
  }
}

}  // namespace mrfattn
