#include "stsccl/graph_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stsccl/container.hpp"
#include "stsccl/errors.hpp"
#include "stsccl/rng.hpp"

namespace stsccl::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string stem_of(const std::string& path) {
  auto dot = path.find_last_of('.');
  return dot == std::string::npos ? path : path.substr(0, dot);
}

// ---------------- CSV helpers ----------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, const std::string& ctx) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw LoadError("cannot parse number `" + s + "` at " + ctx);
  }
}

void derive_calendar(TrafficSeries& s) {
  int64_t T = s.T();
  s.calendar.day_of_week.resize(static_cast<size_t>(T));
  s.calendar.is_weekend.resize(static_cast<size_t>(T));
  s.calendar.is_holiday.assign(static_cast<size_t>(T), 0);
  for (int64_t t = 0; t < T; ++t) {
    int64_t dow = (t / s.steps_per_day) % 7;  // step 0 falls on a Monday
    s.calendar.day_of_week[static_cast<size_t>(t)] = dow;
    s.calendar.is_weekend[static_cast<size_t>(t)] = dow >= 5 ? 1 : 0;
  }
}

void check_values_finite(const TrafficSeries& s) {
  int64_t T = s.T(), N = s.n_nodes(), D = s.d_in();
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t n = 0; n < N; ++n) {
      for (int64_t d = 0; d < D; ++d) {
        double v = s.values.at({t, n, d});
        if (!std::isfinite(v)) {
          throw LoadError("non-finite value at t=" + std::to_string(t) + " node=" + std::to_string(n) +
                          " channel=" + std::to_string(d));
        }
      }
    }
  }
}

void finalize_graph(GraphSpec& g) {
  int64_t N = g.n_nodes;
  // symmetrize and add self-loops
  for (int64_t i = 0; i < N; ++i) {
    for (int64_t j = 0; j < N; ++j) {
      double v = std::max(g.a_con.at({i, j}), g.a_con.at({j, i}));
      v = v != 0.0 ? 1.0 : 0.0;
      g.a_con.at({i, j}) = v;
      g.a_con.at({j, i}) = v;
    }
    g.a_con.at({i, i}) = 1.0;
  }
  // renormalize semantic rows
  int64_t Q = g.semantic.dim(1);
  for (int64_t i = 0; i < N; ++i) {
    double sum = 0;
    for (int64_t q = 0; q < Q; ++q) {
      double v = g.semantic.at({i, q});
      if (v < 0 || !std::isfinite(v)) {
        throw LoadError("semantic row " + std::to_string(i) + " has invalid entry at dim " + std::to_string(q));
      }
      sum += v;
    }
    if (sum <= 0) throw LoadError("semantic row " + std::to_string(i) + " sums to zero");
    for (int64_t q = 0; q < Q; ++q) g.semantic.at({i, q}) /= sum;
  }
  g.validate();
}

TrafficSeries load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty series file: " + path);
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "timestamp") {
    throw LoadError("malformed header in " + path + ": first column must be `timestamp`");
  }
  int64_t N = static_cast<int64_t>(header.size()) - 1;
  for (int64_t n = 0; n < N; ++n) {
    std::string expect = "node_" + std::to_string(n);
    if (header[static_cast<size_t>(n + 1)] != expect) {
      throw LoadError("malformed header in " + path + ": column " + std::to_string(n + 1) + " should be " + expect);
    }
  }
  std::vector<int64_t> timestamps;
  std::vector<double> vals;
  int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int64_t>(fields.size()) != N + 1) {
      throw LoadError("row " + std::to_string(row) + " in " + path + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(N + 1));
    }
    timestamps.push_back(static_cast<int64_t>(parse_field(fields[0], path + " row " + std::to_string(row))));
    for (int64_t n = 0; n < N; ++n) {
      double v = parse_field(fields[static_cast<size_t>(n + 1)],
                             path + " (t=" + std::to_string(row) + ", node=" + std::to_string(n) + ")");
      if (!std::isfinite(v)) {
        throw LoadError("non-finite value at t=" + std::to_string(row) + " node=" + std::to_string(n));
      }
      vals.push_back(v);
    }
    ++row;
  }
  if (row < 2) throw LoadError("series file too short: " + path);
  int64_t interval = timestamps[1] - timestamps[0];
  if (interval <= 0) throw LoadError("non-increasing timestamps in " + path);
  for (size_t t = 1; t < timestamps.size(); ++t) {
    if (timestamps[t] - timestamps[t - 1] != interval) {
      throw LoadError("irregular timestamp at row " + std::to_string(t) + " in " + path);
    }
  }
  TrafficSeries s;
  s.values = Tensor({row, N, 1}, std::move(vals));
  s.interval_minutes = interval;
  s.steps_per_day = 24 * 60 / interval;
  s.steps_per_week = 7 * s.steps_per_day;
  derive_calendar(s);
  return s;
}

void save_series_csv(const TrafficSeries& s, const std::string& path) {
  if (s.d_in() != 1) throw ConfigError("CSV series format supports d_in=1 only; use the binary container");
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out << "timestamp";
  for (int64_t n = 0; n < s.n_nodes(); ++n) out << ",node_" << n;
  out << "\n";
  char buf[32];
  for (int64_t t = 0; t < s.T(); ++t) {
    out << t * s.interval_minutes;
    for (int64_t n = 0; n < s.n_nodes(); ++n) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.values.at({t, n, 0}));
      out << "," << buf;
    }
    out << "\n";
  }
}

TrafficSeries load_series_bin(const std::string& path) {
  auto arrays = read_container(path, "STSB");
  const auto& values = require_array(arrays, "values", path);
  if (values.shape.size() != 3) throw LoadError("values must be [T,N,d_in] in " + path);
  const auto& interval = require_array(arrays, "interval_minutes", path);
  TrafficSeries s;
  s.values = Tensor(values.shape, values.f64);
  s.interval_minutes = interval.i64.at(0);
  if (s.interval_minutes <= 0) throw LoadError("interval_minutes must be positive in " + path);
  s.steps_per_day = 24 * 60 / s.interval_minutes;
  s.steps_per_week = 7 * s.steps_per_day;
  if (const NamedArray* cal = find_array(arrays, "calendar")) {
    if (cal->shape.size() != 2 || cal->shape[0] != s.T() || cal->shape[1] != 3) {
      throw LoadError("calendar must be [T,3] in " + path);
    }
    int64_t T = s.T();
    s.calendar.day_of_week.resize(static_cast<size_t>(T));
    s.calendar.is_weekend.resize(static_cast<size_t>(T));
    s.calendar.is_holiday.resize(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
      s.calendar.day_of_week[static_cast<size_t>(t)] = cal->i64[static_cast<size_t>(t * 3)];
      s.calendar.is_weekend[static_cast<size_t>(t)] = cal->i64[static_cast<size_t>(t * 3 + 1)];
      s.calendar.is_holiday[static_cast<size_t>(t)] = cal->i64[static_cast<size_t>(t * 3 + 2)];
    }
  } else {
    derive_calendar(s);
  }
  check_values_finite(s);
  return s;
}

void save_series_bin(const TrafficSeries& s, const std::string& path) {
  std::vector<NamedArray> arrays;
  NamedArray values;
  values.name = "values";
  values.shape = s.values.shape();
  values.f64.assign(s.values.data(), s.values.data() + s.values.numel());
  arrays.push_back(std::move(values));
  NamedArray interval;
  interval.name = "interval_minutes";
  interval.dtype = 1;
  interval.shape = {1};
  interval.i64 = {s.interval_minutes};
  arrays.push_back(std::move(interval));
  NamedArray cal;
  cal.name = "calendar";
  cal.dtype = 1;
  cal.shape = {s.T(), 3};
  for (int64_t t = 0; t < s.T(); ++t) {
    cal.i64.push_back(s.calendar.day_of_week[static_cast<size_t>(t)]);
    cal.i64.push_back(s.calendar.is_weekend[static_cast<size_t>(t)]);
    cal.i64.push_back(s.calendar.is_holiday[static_cast<size_t>(t)]);
  }
  arrays.push_back(std::move(cal));
  write_container(path, "STSB", arrays);
}

GraphSpec load_graph_csv(const std::string& path) {
  std::string stem = stem_of(path);
  // coords gives N
  std::ifstream coords_in(stem + "_coords.csv");
  if (!coords_in) throw LoadError("cannot open: " + stem + "_coords.csv");
  std::vector<double> coords;
  std::string line;
  int64_t N = 0;
  while (std::getline(coords_in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw LoadError("coords row " + std::to_string(N) + " needs 2 fields");
    coords.push_back(parse_field(f[0], "coords row " + std::to_string(N)));
    coords.push_back(parse_field(f[1], "coords row " + std::to_string(N)));
    ++N;
  }
  if (N == 0) throw LoadError("empty coords file for " + path);

  GraphSpec g;
  g.n_nodes = N;
  g.coords = Tensor({N, 2}, std::move(coords));
  g.a_con = Tensor({N, N});

  std::ifstream edges_in(path);
  if (!edges_in) throw LoadError("cannot open: " + path);
  bool any_dist = false;
  std::vector<double> dist_entries(static_cast<size_t>(N * N), 0.0);
  int64_t row = 0;
  while (std::getline(edges_in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2 && f.size() != 3) {
      throw LoadError("edge row " + std::to_string(row) + " needs `i,j` or `i,j,dist`");
    }
    int64_t i = static_cast<int64_t>(parse_field(f[0], "edge row " + std::to_string(row)));
    int64_t j = static_cast<int64_t>(parse_field(f[1], "edge row " + std::to_string(row)));
    if (i < 0 || i >= N || j < 0 || j >= N) {
      throw LoadError("edge row " + std::to_string(row) + " references node outside [0," + std::to_string(N) + ")");
    }
    g.a_con.at({i, j}) = 1.0;
    if (f.size() == 3) {
      any_dist = true;
      double d = parse_field(f[2], "edge row " + std::to_string(row));
      dist_entries[static_cast<size_t>(i * N + j)] = d;
      dist_entries[static_cast<size_t>(j * N + i)] = d;
    }
    ++row;
  }
  if (any_dist) {
    g.has_dist = true;
    g.a_dist = Tensor({N, N}, std::move(dist_entries));
  }

  std::ifstream sem_in(stem + "_semantic.csv");
  if (!sem_in) throw LoadError("cannot open: " + stem + "_semantic.csv");
  std::vector<double> sem;
  int64_t Q = -1;
  int64_t srow = 0;
  while (std::getline(sem_in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (Q < 0) Q = static_cast<int64_t>(f.size());
    if (static_cast<int64_t>(f.size()) != Q) {
      throw LoadError("semantic row " + std::to_string(srow) + " has inconsistent width");
    }
    for (const auto& s : f) sem.push_back(parse_field(s, "semantic row " + std::to_string(srow)));
    ++srow;
  }
  if (srow != N) {
    throw LoadError("semantic has " + std::to_string(srow) + " rows, graph has " + std::to_string(N) + " nodes");
  }
  g.semantic = Tensor({N, Q}, std::move(sem));
  finalize_graph(g);
  return g;
}

void save_graph_csv(const GraphSpec& g, const std::string& path) {
  std::string stem = stem_of(path);
  char buf[32];
  {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot open for writing: " + path);
    for (int64_t i = 0; i < g.n_nodes; ++i) {
      for (int64_t j = i + 1; j < g.n_nodes; ++j) {
        if (g.a_con.at({i, j}) != 0.0) {
          out << i << "," << j;
          if (g.has_dist) {
            std::snprintf(buf, sizeof(buf), "%.17g", g.a_dist.at({i, j}));
            out << "," << buf;
          }
          out << "\n";
        }
      }
    }
  }
  {
    std::ofstream out(stem + "_coords.csv");
    for (int64_t i = 0; i < g.n_nodes; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", g.coords.at({i, 0}));
      out << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", g.coords.at({i, 1}));
      out << buf << "\n";
    }
  }
  {
    std::ofstream out(stem + "_semantic.csv");
    int64_t Q = g.semantic.dim(1);
    for (int64_t i = 0; i < g.n_nodes; ++i) {
      for (int64_t q = 0; q < Q; ++q) {
        std::snprintf(buf, sizeof(buf), "%.17g", g.semantic.at({i, q}));
        out << (q ? "," : "") << buf;
      }
      out << "\n";
    }
  }
}

GraphSpec load_graph_bin(const std::string& path) {
  auto arrays = read_container(path, "STSG");
  const auto& acon = require_array(arrays, "a_con", path);
  if (acon.shape.size() != 2 || acon.shape[0] != acon.shape[1]) {
    throw LoadError("a_con must be square in " + path);
  }
  GraphSpec g;
  g.n_nodes = acon.shape[0];
  g.a_con = Tensor(acon.shape, acon.f64);
  const auto& coords = require_array(arrays, "coords", path);
  g.coords = Tensor(coords.shape, coords.f64);
  const auto& sem = require_array(arrays, "semantic", path);
  g.semantic = Tensor(sem.shape, sem.f64);
  if (const NamedArray* dist = find_array(arrays, "a_dist")) {
    g.has_dist = true;
    g.a_dist = Tensor(dist->shape, dist->f64);
  }
  finalize_graph(g);
  return g;
}

void save_graph_bin(const GraphSpec& g, const std::string& path) {
  std::vector<NamedArray> arrays;
  auto push = [&](const std::string& name, const Tensor& t) {
    NamedArray a;
    a.name = name;
    a.shape = t.shape();
    a.f64.assign(t.data(), t.data() + t.numel());
    arrays.push_back(std::move(a));
  };
  push("a_con", g.a_con);
  push("coords", g.coords);
  push("semantic", g.semantic);
  if (g.has_dist) push("a_dist", g.a_dist);
  write_container(path, "STSG", arrays);
}

}  // namespace

void GraphSpec::validate() const {
  int64_t N = n_nodes;
  if (a_con.ndim() != 2 || a_con.dim(0) != N || a_con.dim(1) != N) {
    throw LoadError("a_con shape mismatch: " + shape_str(a_con.shape()));
  }
  if (coords.ndim() != 2 || coords.dim(0) != N || coords.dim(1) != 2) {
    throw LoadError("coords shape mismatch: " + shape_str(coords.shape()));
  }
  if (semantic.ndim() != 2 || semantic.dim(0) != N) {
    throw LoadError("semantic shape mismatch: " + shape_str(semantic.shape()));
  }
  if (has_dist && (a_dist.dim(0) != N || a_dist.dim(1) != N)) {
    throw LoadError("a_dist shape mismatch: " + shape_str(a_dist.shape()));
  }
  for (int64_t i = 0; i < N; ++i) {
    if (a_con.at({i, i}) != 1.0) throw LoadError("a_con diagonal must be 1 at node " + std::to_string(i));
    for (int64_t j = 0; j < N; ++j) {
      double v = a_con.at({i, j});
      if (v != 0.0 && v != 1.0) {
        throw LoadError("a_con entry (" + std::to_string(i) + "," + std::to_string(j) + ") not binary");
      }
      if (v != a_con.at({j, i})) {
        throw LoadError("a_con not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
    if (!std::isfinite(coords.at({i, 0})) || !std::isfinite(coords.at({i, 1}))) {
      throw LoadError("non-finite coordinate at node " + std::to_string(i));
    }
    double sum = 0;
    for (int64_t q = 0; q < semantic.dim(1); ++q) {
      double s = semantic.at({i, q});
      if (s < 0) throw LoadError("negative semantic entry at node " + std::to_string(i));
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw LoadError("semantic row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

std::pair<TrafficSeries, GraphSpec> load_dataset(const std::string& series_path, const std::string& graph_path) {
  TrafficSeries s = ends_with(series_path, ".csv") ? load_series_csv(series_path) : load_series_bin(series_path);
  GraphSpec g = ends_with(graph_path, ".csv") ? load_graph_csv(graph_path) : load_graph_bin(graph_path);
  if (s.n_nodes() != g.n_nodes) {
    throw LoadError("series has " + std::to_string(s.n_nodes()) + " nodes, graph has " +
                    std::to_string(g.n_nodes));
  }
  check_values_finite(s);
  return {std::move(s), std::move(g)};
}

void save_dataset(const TrafficSeries& series, const GraphSpec& graph, const std::string& series_path,
                  const std::string& graph_path) {
  if (ends_with(series_path, ".csv")) {
    save_series_csv(series, series_path);
  } else {
    save_series_bin(series, series_path);
  }
  if (ends_with(graph_path, ".csv")) {
    save_graph_csv(graph, graph_path);
  } else {
    save_graph_bin(graph, graph_path);
  }
}

Splits chronological_split(const TrafficSeries& series, std::array<double, 3> fractions) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions) {
    if (f <= 0) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions sum to " + std::to_string(sum) + ", expected 1");
  }
  int64_t T = series.T();
  int64_t n_train = static_cast<int64_t>(std::floor(static_cast<double>(T) * fractions[0]));
  int64_t n_val = static_cast<int64_t>(std::floor(static_cast<double>(T) * fractions[1]));
  Splits s;
  s.train = {0, n_train};
  s.val = {n_train, n_train + n_val};
  s.test = {n_train + n_val, T};  // remainder rows go to test
  return s;
}

std::vector<WindowBatch> make_windows(const TrafficSeries& series, IndexRange range, int64_t p, int64_t k,
                                      int64_t batch_size, uint64_t seed) {
  if (p < 1 || k < 1) throw ConfigError("window lengths p, k must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  int64_t first = range.begin + p - 1;
  int64_t last = range.end - k - 1;  // anchor tau with future tau+1..tau+k inside range
  if (last < first) {
    throw ConfigError("range [" + std::to_string(range.begin) + "," + std::to_string(range.end) +
                      ") too short for p=" + std::to_string(p) + ", k=" + std::to_string(k));
  }
  std::vector<int64_t> anchors;
  for (int64_t tau = first; tau <= last; ++tau) anchors.push_back(tau);
  Rng rng(seed);
  auto perm = rng.permutation(static_cast<int64_t>(anchors.size()));

  int64_t N = series.n_nodes(), D = series.d_in();
  int64_t Td = series.steps_per_day, Tw = series.steps_per_week;

  auto copy_window = [&](Tensor& dst, int64_t sample, int64_t start, int64_t len) {
    for (int64_t t = 0; t < len; ++t) {
      const Scalar* src = series.values.data() + (start + t) * N * D;
      Scalar* out = dst.data() + ((sample * len + t) * N) * D;
      std::memcpy(out, src, static_cast<size_t>(N * D) * sizeof(Scalar));
    }
  };

  std::vector<WindowBatch> batches;
  int64_t n_samples = static_cast<int64_t>(anchors.size());
  for (int64_t b0 = 0; b0 < n_samples; b0 += batch_size) {
    int64_t B = std::min(batch_size, n_samples - b0);
    WindowBatch wb;
    wb.history = Tensor({B, p, N, D});
    wb.future = Tensor({B, k, N, D});
    wb.day_lag = Tensor({B, p, N, D});
    wb.week_lag = Tensor({B, p, N, D});
    wb.day_is_copy.resize(static_cast<size_t>(B));
    wb.week_is_copy.resize(static_cast<size_t>(B));
    for (int64_t i = 0; i < B; ++i) {
      int64_t tau = anchors[static_cast<size_t>(perm[static_cast<size_t>(b0 + i)])];
      wb.anchors.push_back(tau);
      copy_window(wb.history, i, tau - p + 1, p);
      copy_window(wb.future, i, tau + 1, k);
      if (tau - Td - p + 1 >= 0) {
        copy_window(wb.day_lag, i, tau - Td - p + 1, p);
        wb.day_is_copy[static_cast<size_t>(i)] = 0;
      } else {
        copy_window(wb.day_lag, i, tau - p + 1, p);
        wb.day_is_copy[static_cast<size_t>(i)] = 1;
      }
      if (tau - Tw - p + 1 >= 0) {
        copy_window(wb.week_lag, i, tau - Tw - p + 1, p);
        wb.week_is_copy[static_cast<size_t>(i)] = 0;
      } else {
        copy_window(wb.week_lag, i, tau - p + 1, p);
        wb.week_is_copy[static_cast<size_t>(i)] = 1;
      }
    }
    batches.push_back(std::move(wb));
  }
  return batches;
}

std::pair<TrafficSeries, GraphSpec> synth_traffic(int64_t n_nodes, int64_t days, int64_t interval_minutes,
                                                  uint64_t seed) {
  return synth_traffic_ex(n_nodes, days, interval_minutes, seed, SynthParams{});
}

std::pair<TrafficSeries, GraphSpec> synth_traffic_ex(int64_t n_nodes, int64_t days, int64_t interval_minutes,
                                                     uint64_t seed, const SynthParams& params) {
  if (n_nodes < 4) throw ConfigError("synth_traffic needs n_nodes >= 4");
  if (days < 8) throw ConfigError("synth_traffic needs days >= 8 so the week lag is usable");
  if (interval_minutes <= 0 || (24 * 60) % interval_minutes != 0) {
    throw ConfigError("interval_minutes must divide a day");
  }
  int64_t N = n_nodes;
  Rng rng(seed);

  GraphSpec g;
  g.n_nodes = N;
  g.coords = Tensor({N, 2});
  for (int64_t i = 0; i < N; ++i) {
    double theta = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(N);
    g.coords.at({i, 0}) = std::cos(theta);
    g.coords.at({i, 1}) = std::sin(theta);
  }
  // ring plus opposite chords
  g.a_con = Tensor({N, N});
  auto connect = [&](int64_t i, int64_t j) {
    g.a_con.at({i, j}) = 1.0;
    g.a_con.at({j, i}) = 1.0;
  };
  for (int64_t i = 0; i < N; ++i) connect(i, (i + 1) % N);
  for (int64_t i = 0; i < N / 2; ++i) connect(i, (i + N / 2) % N);
  for (int64_t i = 0; i < N; ++i) g.a_con.at({i, i}) = 1.0;
  g.has_dist = true;
  g.a_dist = Tensor({N, N});
  for (int64_t i = 0; i < N; ++i) {
    for (int64_t j = 0; j < N; ++j) {
      double dx = g.coords.at({i, 0}) - g.coords.at({j, 0});
      double dy = g.coords.at({i, 1}) - g.coords.at({j, 1});
      g.a_dist.at({i, j}) = std::sqrt(dx * dx + dy * dy);
    }
  }

  // semantic: 7 POI bins + day-of-week one-hot + weekend one-hot + holiday one-hot,
  // calendar taken at the first timestep, then L1-normalized (Q = 18)
  int64_t Q = 18;
  g.semantic = Tensor({N, Q});
  for (int64_t i = 0; i < N; ++i) {
    double sum = 0;
    std::vector<double> poi(7);
    for (auto& v : poi) {
      v = rng.uniform(0.05, 1.0);
      sum += v;
    }
    for (int64_t q = 0; q < 7; ++q) g.semantic.at({i, q}) = poi[static_cast<size_t>(q)] / sum;
    g.semantic.at({i, 7}) = 1.0;   // day-of-week 0
    g.semantic.at({i, 14}) = 1.0;  // not weekend
    g.semantic.at({i, 16}) = 1.0;  // not holiday
    for (int64_t q = 0; q < Q; ++q) g.semantic.at({i, q}) /= 4.0;  // POI sums 1, one-hots add 3
  }

  TrafficSeries s;
  s.interval_minutes = interval_minutes;
  s.steps_per_day = 24 * 60 / interval_minutes;
  s.steps_per_week = 7 * s.steps_per_day;
  int64_t T = days * s.steps_per_day;
  int64_t D = params.d_in;
  s.values = Tensor({T, N, D});

  std::vector<double> amp(static_cast<size_t>(N)), phase(static_cast<size_t>(N)), wphase(static_cast<size_t>(N));
  for (int64_t i = 0; i < N; ++i) {
    amp[static_cast<size_t>(i)] = rng.uniform(params.daily_amp_lo, params.daily_amp_hi);
    phase[static_cast<size_t>(i)] = rng.uniform(0.0, 2.0 * kPi);
    wphase[static_cast<size_t>(i)] = rng.uniform(0.0, 2.0 * kPi);
  }
  std::vector<double> degree(static_cast<size_t>(N), 0.0);
  for (int64_t i = 0; i < N; ++i) {
    for (int64_t j = 0; j < N; ++j) degree[static_cast<size_t>(i)] += g.a_con.at({i, j});
  }
  std::vector<double> eps(static_cast<size_t>(N));
  for (int64_t t = 0; t < T; ++t) {
    double day_angle = 2.0 * kPi * static_cast<double>(t) / static_cast<double>(s.steps_per_day);
    double week_angle = 2.0 * kPi * static_cast<double>(t) / static_cast<double>(s.steps_per_week);
    for (int64_t d = 0; d < D; ++d) {
      for (int64_t i = 0; i < N; ++i) eps[static_cast<size_t>(i)] = params.noise * rng.normal();
      for (int64_t i = 0; i < N; ++i) {
        // one smoothing pass over the graph couples neighbor noise
        double diffused = 0;
        if (params.noise > 0) {
          double agg = 0;
          for (int64_t j = 0; j < N; ++j) {
            if (g.a_con.at({i, j}) != 0.0) agg += eps[static_cast<size_t>(j)];
          }
          diffused = 0.5 * eps[static_cast<size_t>(i)] + 0.5 * agg / degree[static_cast<size_t>(i)];
        }
        double daily = amp[static_cast<size_t>(i)] * std::sin(day_angle + phase[static_cast<size_t>(i)]);
        double weekly = 1.0 + params.weekly_mod * std::sin(week_angle + wphase[static_cast<size_t>(i)]);
        double chan = 1.0 + 0.25 * static_cast<double>(d);
        s.values.at({t, i, d}) = params.base + chan * daily * weekly + diffused;
      }
    }
  }
  derive_calendar(s);
  g.validate();
  return {std::move(s), std::move(g)};
}

}  // namespace stsccl::data
