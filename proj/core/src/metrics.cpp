#include "qtmtt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qtmtt/encoder.hpp"
#include "qtmtt/errors.hpp"
#include "qtmtt/io.hpp"

namespace qtmtt {

QpMeasurement& QpSeriesMeasurement::at_qp(int qp) {
  for (size_t i = 0; i < kMetricQps.size(); ++i)
    if (kMetricQps[i] == qp) return by_qp[i];
  throw ConfigError("qp " + std::to_string(qp) + " is not one of the four metric QPs");
}

const QpMeasurement& QpSeriesMeasurement::at_qp(int qp) const {
  return const_cast<QpSeriesMeasurement*>(this)->at_qp(qp);
}

bool QpSeriesMeasurement::rate_monotone_sane(std::ostream* warn) const {
  bool ok = true;
  for (size_t i = 0; i + 1 < kMetricQps.size(); ++i) {
    if (by_qp[i].total_rate <= by_qp[i + 1].total_rate) {
      ok = false;
      if (warn)
        *warn << "warning: rate did not fall from qp " << kMetricQps[i] << " to qp "
              << kMetricQps[i + 1] << "\n";
    }
  }
  return ok;
}

namespace {

// Exact rational mean of the four (anchor-test)/anchor terms.  Terms and the
// running sum are int128 fractions; if anything would overflow we fall back
// to long-double accumulation (far beyond any desk-scale counter).
struct RationalMean {
  __int128 num = 0;
  __int128 den = 1;
  bool exact = true;
  long double approx = 0.0L;

  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static bool mul_ok(__int128 a, __int128 b, __int128& out) {
    return !__builtin_mul_overflow(a, b, &out);
  }

  void add(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    approx += (long double)(n) / (long double)(d);
    if (!exact) return;
    const __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    const __int128 gd = gcd128(den, d);
    __int128 scale_mine, scale_new, new_den, a, b;
    if (!mul_ok(den / gd, d, new_den)) {
      exact = false;
      return;
    }
    scale_mine = d / gd;
    scale_new = den / gd;
    if (!mul_ok(num, scale_mine, a) || !mul_ok(n, scale_new, b)) {
      exact = false;
      return;
    }
    num = a + b;
    den = new_den;
    const __int128 g2 = gcd128(num, den);
    if (g2 > 1) {
      num /= g2;
      den /= g2;
    }
  }

  // Mean over `count` terms, as a percentage.
  double percent(int count) const {
    if (!exact) return double(approx * 100.0L / count);
    return double((long double)(num) * 100.0L / ((long double)(den) * count));
  }
};

// (anchor - test) / anchor for exact integer counters.
void add_counter_term(RationalMean& m, uint64_t anchor, uint64_t test) {
  if (anchor == 0) throw ConfigError("anchor counter is zero");
  m.add(__int128(anchor) - __int128(test), __int128(anchor));
}

// Every finite double is mantissa * 2^exp exactly.
struct DecomposedDouble {
  int64_t mantissa = 0;
  int exp = 0;
};
DecomposedDouble decompose(double v) {
  if (v == 0.0) return {0, 0};
  int e = 0;
  const double m = std::frexp(v, &e);
  return {int64_t(std::ldexp(m, 53)), e - 53};
}

// (anchor - test) / anchor for doubles, still exact when exponents are close.
void add_time_term(RationalMean& m, double anchor, double test) {
  if (!(anchor > 0.0)) throw ConfigError("anchor time is zero");
  if (!std::isfinite(anchor) || !std::isfinite(test)) throw NumericError("non-finite time");
  const DecomposedDouble a = decompose(anchor);
  const DecomposedDouble t = decompose(test);
  if (t.mantissa == 0) {
    m.add(1, 1);
    return;
  }
  const int e = std::min(a.exp, t.exp);
  const int sa = a.exp - e, st = t.exp - e;
  if (sa > 63 || st > 63) {  // wildly different magnitudes: approximate path
    m.exact = false;
    m.approx += (long double)(anchor - test) / (long double)anchor;
    return;
  }
  const __int128 an = __int128(a.mantissa) << sa;
  const __int128 tn = __int128(t.mantissa) << st;
  m.add(an - tn, an);
}

template <typename Get>
double reduction_percent(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor,
                         Get get_counter) {
  RationalMean m;
  for (size_t i = 0; i < kMetricQps.size(); ++i)
    add_counter_term(m, get_counter(anchor.by_qp[i]), get_counter(test.by_qp[i]));
  return m.percent(int(kMetricQps.size()));
}

}  // namespace

double cu_reduction(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor) {
  return reduction_percent(test, anchor, [](const QpMeasurement& m) { return m.cu_reconstructions; });
}

double pixel_reduction(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor) {
  return reduction_percent(test, anchor,
                           [](const QpMeasurement& m) { return m.pixel_reconstructions; });
}

double et_reduction(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor) {
  RationalMean m;
  for (size_t i = 0; i < kMetricQps.size(); ++i)
    add_time_term(m, anchor.by_qp[i].wall_time, test.by_qp[i].wall_time);
  return m.percent(int(kMetricQps.size()));
}

double cu_ratio_raw(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor) {
  return 100.0 - cu_reduction(test, anchor);
}

double pixel_ratio_raw(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor) {
  return 100.0 - pixel_reduction(test, anchor);
}

double psnr_db(double mse) {
  if (!(mse > 0.0)) return 100.0;
  return std::min(100.0, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double psnr(const Frame& original, const Frame& recon) {
  if (original.width() != recon.width() || original.height() != recon.height())
    throw ConfigError("psnr: frame dimensions differ");
  return psnr_db(region_mse(original.luma, recon.luma, original.width(), original.height()));
}

// ---------------------------------------------------------------------------
// BD-rate

namespace {

struct Curve {
  std::vector<double> x;  // psnr, strictly increasing
  std::vector<double> y;  // ln(rate)
  std::vector<double> m;  // interpolant slopes
};

// Monotone piecewise-cubic slopes (Fritsch-Carlson construction).
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = int(x.size());
  std::vector<double> h(n - 1), d(n - 1), m(n);
  for (int i = 0; i < n - 1; ++i) {
    h[i] = x[i + 1] - x[i];
    d[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    m[0] = m[1] = d[0];
    return m;
  }
  auto endpoint = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return s;
  };
  m[0] = endpoint(h[0], h[1], d[0], d[1]);
  m[n - 1] = endpoint(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  for (int i = 1; i < n - 1; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  return m;
}

Curve build_curve(std::span<const RdPoint> points, const char* which) {
  if (points.size() < 2) throw NumericError(std::string(which) + " curve needs at least 2 points");
  std::vector<RdPoint> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(), [](const RdPoint& a, const RdPoint& b) { return a.psnr < b.psnr; });
  Curve c;
  for (const RdPoint& pt : p) {
    if (!(pt.rate > 0.0)) throw NumericError(std::string(which) + " curve has a non-positive rate");
    c.x.push_back(pt.psnr);
    c.y.push_back(std::log(pt.rate));
  }
  for (size_t i = 0; i + 1 < c.x.size(); ++i) {
    if (!(c.x[i] < c.x[i + 1]) || !(c.y[i] < c.y[i + 1]))
      throw NumericError(std::string(which) + " curve is not strictly monotone in psnr and rate");
  }
  c.m = pchip_slopes(c.x, c.y);
  return c;
}

// Integral of the Hermite interpolant over [lo, hi] (inside the curve span).
double integrate(const Curve& c, double lo, double hi) {
  // Antiderivatives of the four Hermite basis polynomials.
  auto a00 = [](double t) { return t * t * t * t / 2.0 - t * t * t + t; };
  auto a10 = [](double t) { return t * t * t * t / 4.0 - 2.0 * t * t * t / 3.0 + t * t / 2.0; };
  auto a01 = [](double t) { return -t * t * t * t / 2.0 + t * t * t; };
  auto a11 = [](double t) { return t * t * t * t / 4.0 - t * t * t / 3.0; };

  double total = 0.0;
  for (size_t i = 0; i + 1 < c.x.size(); ++i) {
    const double x0 = c.x[i], x1 = c.x[i + 1];
    const double a = std::max(lo, x0), b = std::min(hi, x1);
    if (!(a < b)) continue;
    const double h = x1 - x0;
    const double t1 = (a - x0) / h, t2 = (b - x0) / h;
    total += h * (c.y[i] * (a00(t2) - a00(t1)) + h * c.m[i] * (a10(t2) - a10(t1)) +
                  c.y[i + 1] * (a01(t2) - a01(t1)) + h * c.m[i + 1] * (a11(t2) - a11(t1)));
  }
  return total;
}

}  // namespace

double bd_rate(std::span<const RdPoint> test, std::span<const RdPoint> anchor) {
  const Curve ct = build_curve(test, "test");
  const Curve ca = build_curve(anchor, "anchor");
  const double lo = std::max(ct.x.front(), ca.x.front());
  const double hi = std::min(ct.x.back(), ca.x.back());
  if (!(lo < hi)) throw NumericError("rd curves have no overlapping psnr range");
  const double mean_diff = (integrate(ct, lo, hi) - integrate(ca, lo, hi)) / (hi - lo);
  return (std::exp(mean_diff) - 1.0) * 100.0;
}

// ---------------------------------------------------------------------------
// sweep aggregation

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

}  // namespace

std::string tradeoff_csv(std::span<const TradeoffPoint> rows) {
  std::string out = "label,N,T,bd_rate_pct,et_pct,pixel_ratio_pct,cu_ratio_pct\n";
  for (const TradeoffPoint& r : rows) {
    out += csv_field(r.label);
    out += ',';
    if (r.topn > 0) out += std::to_string(r.topn);
    out += ',';
    if (r.threshold >= 0.0) out += format_double(r.threshold);
    out += ',';
    out += format_double(r.bd_rate_percent);
    out += ',';
    out += format_double(r.et_percent);
    out += ',';
    out += format_double(r.pixel_ratio_percent);
    out += ',';
    out += format_double(r.cu_ratio_percent);
    out += '\n';
  }
  return out;
}

std::vector<TradeoffPoint> pareto_sweep(const std::vector<NamedFrame>& corpus,
                                        std::span<const SelectorSpec> configs,
                                        const PartitionConstraints& c, const SelectorSpec& anchor,
                                        const QNetwork* net, bool modeled_time,
                                        std::ostream* row_errors) {
  const auto anchor_sel = make_selector(anchor, net);
  const QpSeriesMeasurement base = measure_series(corpus, c, *anchor_sel, modeled_time);

  auto curve_of = [](const QpSeriesMeasurement& m) {
    std::vector<RdPoint> pts;
    for (const QpMeasurement& q : m.by_qp) pts.push_back(RdPoint{q.total_rate, q.psnr});
    return pts;
  };
  const std::vector<RdPoint> anchor_curve = curve_of(base);

  std::vector<TradeoffPoint> rows;
  for (const SelectorSpec& spec : configs) {
    try {
      const auto sel = make_selector(spec, net);
      const QpSeriesMeasurement meas = measure_series(corpus, c, *sel, modeled_time);
      TradeoffPoint p;
      p.label = spec.label;
      const bool has_n =
          spec.kind == SelectorSpec::Kind::Agent || spec.kind == SelectorSpec::Kind::Random;
      p.topn = has_n ? spec.topn : 0;
      p.threshold = spec.kind == SelectorSpec::Kind::Agent ? spec.threshold : -1.0;
      p.bd_rate_percent = bd_rate(curve_of(meas), anchor_curve);
      p.et_percent = et_reduction(meas, base);
      p.pixel_ratio_percent = pixel_reduction(meas, base);
      p.cu_ratio_percent = cu_reduction(meas, base);
      p.pixel_ratio_raw_percent = pixel_ratio_raw(meas, base);
      p.cu_ratio_raw_percent = cu_ratio_raw(meas, base);
      rows.push_back(std::move(p));
    } catch (const std::exception& e) {
      if (row_errors) *row_errors << "sweep row '" << spec.label << "' failed: " << e.what() << "\n";
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    return a.pixel_ratio_percent < b.pixel_ratio_percent;
  });
  return rows;
}

}  // namespace qtmtt
