// Copyright 2026 The Stripehouse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "stripehouse/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "stripehouse/datagen.hpp"
#include "stripehouse/error.hpp"
#include "stripehouse/ingest.hpp"

namespace stripehouse {

namespace fs = std::filesystem;

std::string complex_query(std::uint64_t n_labs) {
  return "SELECT BUCKET(l.result_value,0,50,100,200) AS cat, COUNT(DISTINCT e.patient_id) "
         "FROM lab_procedure l JOIN encounter e ON l.encounter_id = e.encounter_id "
         "WHERE l.lab_code = 'LC03' AND l.lab_id < " +
         std::to_string(n_labs * 2 / 5) + " GROUP BY cat";
}

void BenchPlan::validate() const {
  if (repeats == 0) throw Error(ErrorCode::InvalidSchema, "repeats must be at least 1");
  if (sizes.empty()) throw Error(ErrorCode::InvalidSchema, "no sizes given");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw Error(ErrorCode::InvalidSchema, "sizes must be strictly ascending");
  }
  if (sizes.front() < 100) throw Error(ErrorCode::InvalidSchema, "sizes below 100 lab rows are not supported");
  if (formats.empty()) throw Error(ErrorCode::InvalidSchema, "no formats given");
  if (executors && sweep.empty()) throw Error(ErrorCode::InvalidSchema, "executor sweep is empty");
  for (auto e : sweep) {
    if (e == 0) throw Error(ErrorCode::InvalidSchema, "executor counts must be positive");
  }
  if (fixed_executors == 0 || cores == 0) throw Error(ErrorCode::InvalidSchema, "executors and cores must be positive");
}

std::string bench_csv_line(const BenchRow& r) {
  char median[32], cost[32];
  std::snprintf(median, sizeof median, "%.6f", r.median_response_s);
  std::snprintf(cost, sizeof cost, "%.6f", r.cost_estimate);
  std::ostringstream os;
  os << r.scenario << ',' << storage_format_name(r.format) << ',' << r.n_rows << ',' << r.executors << ','
     << median << ',' << r.rows_read << ',' << r.bytes_read << ',' << r.stripes_pruned << ',' << cost;
  return os.str();
}

GenSpec bench_gen_spec(std::uint64_t n_labs, std::uint64_t seed) {
  GenSpec spec;
  spec.seed = seed;
  spec.n_labs = n_labs;
  spec.n_encounters = std::max<std::uint64_t>(1, n_labs / 10);
  spec.n_patients = std::max<std::uint64_t>(1, n_labs / 100);
  return spec;
}

BenchDataset prepare_dataset(const fs::path& dir, std::uint64_t n_labs, std::uint64_t seed) {
  BenchDataset ds;
  ds.n_labs = n_labs;
  ds.csv_dir = dir / "csv";
  ds.rowtext_root = dir / "rowtext";
  ds.stripe_root = dir / "stripe";
  const fs::path marker = dir / "READY";
  const std::string stamp = "seed=" + std::to_string(seed) + " n_labs=" + std::to_string(n_labs) + "\n";
  if (fs::exists(marker)) {
    std::ifstream in(marker);
    std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (got == stamp) return ds;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  const GeneratedFiles files = generate(bench_gen_spec(n_labs, seed), ds.csv_dir);
  for (StorageFormat f : {StorageFormat::RowText, StorageFormat::Stripe}) {
    Catalog catalog(ds.root(f));
    IngestOptions opts;
    opts.format = f;
    ingest_csv(catalog, files.encounter_csv, "encounter", opts);
    ingest_csv(catalog, files.lab_procedure_csv, "lab_procedure", opts);
  }
  write_file_atomic(marker, stamp);
  return ds;
}

Measurement measure(std::string_view sql, const Catalog& catalog, const ExecConfig& config, std::uint32_t repeats) {
  Engine engine(catalog.data_root() / "shuffle");
  Measurement m;
  m.last = run_query(sql, catalog, config, engine);  // warm-up, discarded
  std::vector<double> times;
  for (std::uint32_t i = 0; i < repeats; ++i) {
    m.last = run_query(sql, catalog, config, engine);
    times.push_back(m.last.metrics.response_time_s);
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  m.median_s = n % 2 ? times[n / 2] : (times[n / 2 - 1] + times[n / 2]) / 2;
  return m;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (v >= 1e6 && std::fmod(v, 1e5) == 0) {
    std::snprintf(buf, sizeof buf, "%gM", v / 1e6);
  } else if (v >= 1e3 && std::fmod(v, 100) == 0) {
    std::snprintf(buf, sizeof buf, "%gk", v / 1e3);
  } else {
    std::snprintf(buf, sizeof buf, "%g", v);
  }
  return buf;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgSeries>& series) {
  constexpr double W = 720, H = 440, L = 80, R = 170, T = 50, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::vector<double> xs;
  double ymax = 0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xs.push_back(x);
      ymax = std::max(ymax, y);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (ymax <= 0) ymax = 1;
  ymax *= 1.1;
  double lx0 = xs.empty() ? 0 : std::log10(xs.front());
  double lx1 = xs.empty() ? 1 : std::log10(xs.back());
  if (lx1 - lx0 < 1e-12) {
    lx0 -= 0.5;
    lx1 += 0.5;
  }
  const auto px = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * pw; };
  const auto py = [&](double y) { return T + ph - y / ymax * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  for (double x : xs) {
    os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << T + ph << "\" x2=\"" << num(px(x)) << "\" y2=\"" << T + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << T + ph + 19 << "\" text-anchor=\"middle\">" << tick_label(x)
       << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double y = ymax * i / 5;
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << num(py(y)) << "\" x2=\"" << L << "\" y2=\"" << num(py(y))
       << "\" stroke=\"black\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", y);
    os << "<text x=\"" << L - 8 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
     << "</text>\n";
  os << "<text x=\"20\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << num(T + ph / 2) << ")\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    auto pts = series[i].points;
    std::sort(pts.begin(), pts.end());
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) os << (k ? " " : "") << num(px(pts[k].first)) << ',' << num(py(pts[k].second));
    os << "\"/>\n";
    for (const auto& [x, y] : pts) {
      os << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(i);
    os << "<line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << L + pw + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[i].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<BenchRow> run_bench(const BenchPlan& plan, std::ostream* log) {
  plan.validate();
  fs::create_directories(plan.out_dir);
  const fs::path work = plan.work_dir.empty() ? plan.out_dir / "work" : plan.work_dir;
  const fs::path csv_path = plan.out_dir / "bench.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw Error(ErrorCode::IoFailure, "cannot create " + csv_path.string());
  csv << kBenchCsvHeader << '\n' << std::flush;

  std::vector<BenchRow> rows;
  const auto record = [&](BenchRow row) {
    csv << bench_csv_line(row) << '\n' << std::flush;
    if (log) *log << bench_csv_line(row) << std::endl;
    rows.push_back(std::move(row));
  };
  const auto cell = [&](const std::string& scenario, StorageFormat f, const BenchDataset& ds, std::string_view sql,
                        std::uint32_t executors) {
    Catalog catalog(ds.root(f));
    ExecConfig config;
    config.executors = executors;
    config.cores_per_executor = plan.cores;
    const Measurement m = measure(sql, catalog, config, plan.repeats);
    BenchRow row;
    row.scenario = scenario;
    row.format = f;
    row.n_rows = ds.n_labs;
    row.executors = executors;
    row.median_response_s = m.median_s;
    row.rows_read = m.last.metrics.rows_read;
    row.bytes_read = m.last.metrics.bytes_read;
    row.stripes_pruned = m.last.metrics.stripes_pruned;
    row.cost_estimate = m.last.cost.total;
    record(std::move(row));
  };

  if (plan.simple || plan.complex) {
    for (std::uint64_t n : plan.sizes) {
      const BenchDataset ds = prepare_dataset(work / ("n" + std::to_string(n)), n, plan.seed);
      for (StorageFormat f : plan.formats) {
        if (plan.simple) cell("simple", f, ds, kSimpleQuery, plan.fixed_executors);
        if (plan.complex) cell("complex", f, ds, complex_query(n), plan.fixed_executors);
      }
    }
  }
  if (plan.executors) {
    const std::uint64_t n = plan.sizes.back();
    const BenchDataset ds = prepare_dataset(work / ("n" + std::to_string(n)), n, plan.seed);
    const StorageFormat f =
        std::count(plan.formats.begin(), plan.formats.end(), StorageFormat::Stripe) ? StorageFormat::Stripe
                                                                                      : plan.formats.front();
    for (std::uint32_t e : plan.sweep) {
      cell("executors_simple", f, ds, kSimpleQuery, e);
      cell("executors_complex", f, ds, complex_query(n), e);
    }
  }

  // Charts.
  const auto series_by = [&](const std::string& scenario, bool by_format) {
    std::map<std::string, SvgSeries> m;
    for (const BenchRow& r : rows) {
      if (r.scenario != scenario) continue;
      const std::string name = std::string(storage_format_name(r.format));
      auto& s = m[name];
      s.name = name;
      s.points.emplace_back(by_format ? static_cast<double>(r.n_rows) : static_cast<double>(r.executors),
                            r.median_response_s);
    }
    std::vector<SvgSeries> out;
    for (auto& [k, s] : m) out.push_back(std::move(s));
    return out;
  };
  const auto write = [&](const char* file, const std::string& svg) {
    std::ofstream out(plan.out_dir / file, std::ios::trunc);
    out << svg;
    if (!out) throw Error(ErrorCode::IoFailure, std::string("cannot write ") + file);
  };
  write("scenario1.svg", render_svg("Response time vs. number of records for a simple query", "Number of records",
                                    "Response time (s)", series_by("simple", true)));
  write("scenario2.svg", render_svg("Response time vs. number of records for a complex query", "Number of records",
                                    "Response time (s)", series_by("complex", true)));
  std::vector<SvgSeries> sweep;
  for (const char* q : {"executors_simple", "executors_complex"}) {
    SvgSeries s;
    s.name = std::string(q).substr(std::strlen("executors_")) + " query";
    for (const BenchRow& r : rows) {
      if (r.scenario == q) s.points.emplace_back(static_cast<double>(r.executors), r.median_response_s);
    }
    sweep.push_back(std::move(s));
  }
  write("scenario3.svg", render_svg("Response time vs. number of executors", "Number of executors",
                                    "Response time (s)", sweep));
  return rows;
}

}  // namespace stripehouse
