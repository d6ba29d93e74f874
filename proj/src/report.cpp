#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "msphs/sweep.hpp"

namespace msphs {

namespace {

double quantile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  if (sorted.size() == 1) return sorted[0];
  const double h = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - lo;
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_type7(values, 0.5);
}

Aggregate aggregate(std::vector<double> values, int n_total) {
  Aggregate a;
  a.n_total = n_total;
  a.n_ok = static_cast<int>(values.size());
  if (values.empty()) return a;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (double v : values) a.mean += v;
  a.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (n - 1.0));  // sample standard deviation
  }
  a.median = quantile_type7(values, 0.5);
  a.q1 = quantile_type7(values, 0.25);
  a.q3 = quantile_type7(values, 0.75);
  const double half = 1.96 * a.stddev / std::sqrt(n);
  a.ci95_lo = a.mean - half;
  a.ci95_hi = a.mean + half;
  return a;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "spearman needs two equal series, length >= 2");
  }
  const auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return v[x] < v[y];
    });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;  // average rank on ties
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

namespace {

struct CellKey {
  std::string system, method;
  double sigma_x, sigma_j;
  bool operator<(const CellKey& o) const {
    return std::tie(system, method, sigma_x, sigma_j) <
           std::tie(o.system, o.method, o.sigma_x, o.sigma_j);
  }
};

}  // namespace

void write_reports(const ResultsStore& store, const std::filesystem::path& out_dir) {
  if (store.runs().empty()) {
    throw Error(ErrorCode::InsufficientData, "results store is empty");
  }
  std::filesystem::create_directories(out_dir);

  std::map<CellKey, std::vector<const RunResult*>> cells;
  std::set<std::string> systems, methods;
  std::set<double> jitters, noises;
  for (const auto& r : store.runs()) {
    cells[{r.system, r.method, r.sigma_x, r.sigma_j}].push_back(&r);
    systems.insert(r.system);
    methods.insert(r.method);
    jitters.insert(r.sigma_j);
    noises.insert(r.sigma_x);
  }

  // vf_mse.csv: per-cell aggregates of the field MSE
  {
    std::ofstream out(out_dir / "vf_mse.csv");
    out << "system,method,sigma_x,sigma_j,n_ok,n_total,mean,std,ci95_lo,ci95_hi,"
           "median,q1,q3\n";
    for (const auto& [key, runs] : cells) {
      std::vector<double> values;
      for (const auto* r : runs) {
        if (r->ok) values.push_back(r->vf_mse);
      }
      const Aggregate a = aggregate(std::move(values), static_cast<int>(runs.size()));
      out << key.system << ',' << key.method << ',' << fmt17(key.sigma_x) << ','
          << fmt17(key.sigma_j) << ',' << a.n_ok << ',' << a.n_total << ',' << fmt17(a.mean)
          << ',' << fmt17(a.stddev) << ',' << fmt17(a.ci95_lo) << ',' << fmt17(a.ci95_hi)
          << ',' << fmt17(a.median) << ',' << fmt17(a.q1) << ',' << fmt17(a.q3) << "\n";
    }
  }

  // cosine.csv: systems x methods, "mean (std)" cells over all runs
  {
    std::ofstream out(out_dir / "cosine.csv");
    out << "system";
    for (const auto& m : methods) out << ',' << m;
    out << "\n";
    for (const auto& s : systems) {
      out << s;
      for (const auto& m : methods) {
        std::vector<double> values;
        int total = 0;
        for (const auto& [key, runs] : cells) {
          if (key.system != s || key.method != m) continue;
          for (const auto* r : runs) {
            ++total;
            if (r->ok) values.push_back(r->vf_cosine);
          }
        }
        if (total == 0) {
          out << ",";
          continue;
        }
        const Aggregate a = aggregate(std::move(values), total);
        out << ",\"" << fmt_g(a.mean) << " (" << fmt_g(a.stddev) << ")\"";
      }
      out << "\n";
    }
  }

  // calibration_noise.csv: per noise level medians + IQR of h_mse and sigma_H^2
  {
    std::ofstream out(out_dir / "calibration_noise.csv");
    out << "system,method,sigma_x,sigma_j,n_ok,n_total,"
           "h_mse_median,h_mse_q1,h_mse_q3,var_median,var_q1,var_q3,"
           "ratio_median,ratio_q1,ratio_q3\n";
    for (const auto& [key, runs] : cells) {
      std::vector<double> mse, var, ratio;
      int total = 0;
      for (const auto* r : runs) {
        ++total;
        if (r->ok && r->h_mse && r->h_mean_var && r->h_ratio) {
          mse.push_back(*r->h_mse);
          var.push_back(*r->h_mean_var);
          ratio.push_back(*r->h_ratio);
        }
      }
      if (mse.empty()) continue;  // method has no surface posterior
      const Aggregate am = aggregate(std::move(mse), total);
      const Aggregate av = aggregate(std::move(var), total);
      const Aggregate ar = aggregate(std::move(ratio), total);
      out << key.system << ',' << key.method << ',' << fmt17(key.sigma_x) << ','
          << fmt17(key.sigma_j) << ',' << am.n_ok << ',' << am.n_total << ','
          << fmt17(am.median) << ',' << fmt17(am.q1) << ',' << fmt17(am.q3) << ','
          << fmt17(av.median) << ',' << fmt17(av.q1) << ',' << fmt17(av.q3) << ','
          << fmt17(ar.median) << ',' << fmt17(ar.q1) << ',' << fmt17(ar.q3) << "\n";
    }
  }

  // calibration_jitter.csv: jitter rows, "median [Q1, Q3]" ratio cells
  {
    std::ofstream out(out_dir / "calibration_jitter.csv");
    out << "system,sigma_j";
    for (const auto& m : methods) out << ',' << m;
    out << "\n";
    for (const auto& s : systems) {
      for (double sj : jitters) {
        // skip row if nothing recorded for this (system, jitter)
        bool any = false;
        std::ostringstream row;
        row << s << ',' << fmt17(sj);
        for (const auto& m : methods) {
          std::vector<double> ratio;
          for (const auto& [key, runs] : cells) {
            if (key.system != s || key.method != m || key.sigma_j != sj) continue;
            for (const auto* r : runs) {
              if (r->ok && r->h_ratio) ratio.push_back(*r->h_ratio);
            }
          }
          if (ratio.empty()) {
            row << ",";
            continue;
          }
          any = true;
          std::sort(ratio.begin(), ratio.end());
          row << ",\"" << fmt_g(quantile_type7(ratio, 0.5)) << " ["
              << fmt_g(quantile_type7(ratio, 0.25)) << ", "
              << fmt_g(quantile_type7(ratio, 0.75)) << "]\"";
        }
        if (any) out << row.str() << "\n";
      }
    }
  }
}

}  // namespace msphs
