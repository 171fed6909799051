#pragma once

// Report files: CSV tables and one SVG chart per sweep. Doubles are written
// in shortest round-trip form, so parsing a CSV back gives the same bits.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hcirl/errors.hpp"
#include "hcirl/metrics.hpp"
#include "hcirl/sweeps.hpp"

namespace hcirl {

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{"iteration",          "cumulative_reward",
                                             "avg_episode_reward", "success_rate",
                                             "epsilon",            "episodes_seen"};
  return cols;
}
inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{"parameter",         "value",
                                             "seed",              "cumulative_reward",
                                             "avg_episode_reward", "success_rate",
                                             "convergence_iteration"};
  return cols;
}
inline const std::vector<std::string>& compare_columns() {
  static const std::vector<std::string> cols{"agent", "cum_reward_median", "avg_reward_median",
                                             "convergence_median", "success_median"};
  return cols;
}

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw NumericError("cannot format double");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError("not a non-negative integer: '" + std::string(s) + "'");
  }
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

/// Cells never contain commas or quotes, so plain splitting suffices.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  const auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  bool first = true;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw ValidationError("ragged CSV row");
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
  }
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

inline std::string format_optional(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

inline CsvTable metrics_table(const MetricsSeries& series) {
  CsvTable t{metrics_columns(), {}};
  for (const auto& m : series) {
    t.rows.push_back({std::to_string(m.iteration), format_double(m.cumulative_reward),
                      format_double(m.avg_episode_reward), format_double(m.success_rate),
                      format_double(m.epsilon), std::to_string(m.episodes_seen)});
  }
  return t;
}

inline MetricsSeries parse_metrics(const CsvTable& t) {
  if (t.header != metrics_columns()) throw ValidationError("unexpected metrics.csv header");
  MetricsSeries out;
  for (const auto& r : t.rows) {
    out.push_back({parse_uint(r[0]), parse_double(r[1]), parse_double(r[2]), parse_double(r[3]),
                   parse_double(r[4]), parse_uint(r[5])});
  }
  return out;
}

inline CsvTable training_table(const std::vector<TrainingRecord>& training) {
  CsvTable t{{"iteration", "avg_episode_reward", "success_rate", "grad_var_advantage",
              "grad_var_raw_q"},
             {}};
  for (const auto& r : training) {
    t.rows.push_back({std::to_string(r.iteration), format_double(r.avg_episode_reward),
                      format_double(r.success_rate), format_double(r.grad_var_advantage),
                      format_double(r.grad_var_raw_q)});
  }
  return t;
}

inline CsvTable sweep_table(const std::optional<SweepResult>& sweep) {
  CsvTable t{sweep_columns(), {}};
  if (!sweep) return t;
  for (const auto& c : sweep->cells) {
    if (c.run.failed) {
      t.rows.push_back({to_string(sweep->parameter), format_double(c.value),
                        std::to_string(c.run.seed), "", "", "", ""});
      continue;
    }
    t.rows.push_back({to_string(sweep->parameter), format_double(c.value),
                      std::to_string(c.run.seed), format_double(c.run.cumulative_reward),
                      format_double(c.run.avg_episode_reward), format_double(c.run.success_rate),
                      format_optional(c.run.convergence_iteration)});
  }
  return t;
}

inline CsvTable sweep_summary_table(const SweepResult& sweep) {
  CsvTable t{{"parameter", "value", "runs", "avg_reward_mean", "avg_reward_se", "success_mean",
              "success_se", "cum_reward_mean", "cum_reward_se"},
             {}};
  for (const auto& s : sweep.summary) {
    t.rows.push_back({to_string(sweep.parameter), format_double(s.value),
                      std::to_string(s.avg_episode_reward.n), format_double(s.avg_episode_reward.mean),
                      format_double(s.avg_episode_reward.se), format_double(s.success_rate.mean),
                      format_double(s.success_rate.se), format_double(s.cumulative_reward.mean),
                      format_double(s.cumulative_reward.se)});
  }
  return t;
}

inline CsvTable compare_table(const std::optional<CompareResult>& cmp) {
  CsvTable t{compare_columns(), {}};
  if (!cmp) return t;
  for (const auto& r : cmp->rows) {
    if (r.runs == 0) {
      t.rows.push_back({to_string(r.agent), "", "", "", ""});
      continue;
    }
    t.rows.push_back({to_string(r.agent), format_double(r.cum_reward_median),
                      format_double(r.avg_reward_median), format_double(r.convergence_median),
                      format_double(r.success_median)});
  }
  return t;
}

inline CsvTable compare_runs_table(const CompareResult& cmp) {
  CsvTable t{{"agent", "seed", "cumulative_reward", "avg_episode_reward", "success_rate",
              "convergence_iteration"},
             {}};
  for (std::size_t a = 0; a < cmp.agents.size(); ++a) {
    for (std::size_t s = 0; s < cmp.seeds.size(); ++s) {
      const RunCell& c = cmp.cell(a, s);
      if (c.failed) {
        t.rows.push_back({to_string(cmp.agents[a]), std::to_string(c.seed), "", "", "", ""});
        continue;
      }
      t.rows.push_back({to_string(cmp.agents[a]), std::to_string(c.seed),
                        format_double(c.cumulative_reward), format_double(c.avg_episode_reward),
                        format_double(c.success_rate), format_optional(c.convergence_iteration)});
    }
  }
  return t;
}

inline CsvTable variance_table(const CompareResult& cmp) {
  CsvTable t{{"agent", "iteration", "grad_var_advantage", "grad_var_raw_q"}, {}};
  for (const auto& v : cmp.variance) {
    for (std::size_t k = 0; k < v.advantage.size(); ++k) {
      t.rows.push_back({to_string(v.agent), std::to_string(k), format_double(v.advantage[k]),
                        format_double(v.raw_q[k])});
    }
  }
  return t;
}

/// Line chart of mean avg_episode_reward per swept value with standard-error
/// bars. The x axis is categorical (grid order, evenly spaced).
inline std::string sweep_svg(const SweepResult& sweep) {
  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 60;
  const auto& pts = sweep.summary;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (const auto& p : pts) {
    if (p.avg_episode_reward.n == 0) continue;
    lo = std::min(lo, p.avg_episode_reward.mean - p.avg_episode_reward.se);
    hi = std::max(hi, p.avg_episode_reward.mean + p.avg_episode_reward.se);
  }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double pad = std::max(0.05 * (hi - lo), 1e-3);
  lo -= pad;
  hi += pad;
  const double plot_w = W - left - right;
  const double plot_h = H - top - bottom;
  const auto x_of = [&](std::size_t i) {
    return left + plot_w * (static_cast<double>(i) + 0.5) / static_cast<double>(pts.size());
  };
  const auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">avg episode reward vs "
      << to_string(sweep.parameter) << "</text>\n";
  svg << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << num(y_of(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << H - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << config_key(sweep.parameter) << "</text>\n";

  std::string polyline;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    svg << "<text x=\"" << num(x_of(i)) << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(pts[i].value) << "</text>\n";
    if (pts[i].avg_episode_reward.n == 0) continue;
    const double m = pts[i].avg_episode_reward.mean;
    if (!polyline.empty()) polyline += ' ';
    polyline += num(x_of(i)) + "," + num(y_of(m));
  }
  if (!polyline.empty()) {
    svg << "<polyline class=\"series\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
           "points=\""
        << polyline << "\"/>\n";
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].avg_episode_reward.n == 0) continue;
    const double m = pts[i].avg_episode_reward.mean;
    const double se = pts[i].avg_episode_reward.se;
    svg << "<line class=\"errorbar\" x1=\"" << num(x_of(i)) << "\" y1=\"" << num(y_of(m - se))
        << "\" x2=\"" << num(x_of(i)) << "\" y2=\"" << num(y_of(m + se))
        << "\" stroke=\"black\"/>\n";
    svg << "<circle class=\"point\" cx=\"" << num(x_of(i)) << "\" cy=\"" << num(y_of(m))
        << "\" r=\"4\" fill=\"steelblue\" data-value=\"" << format_double(pts[i].value)
        << "\" data-mean=\"" << format_double(m) << "\" data-se=\"" << format_double(se)
        << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

struct Report {
  MetricsSeries metrics;
  std::vector<TrainingRecord> training;
  std::optional<SweepResult> sweep;
  std::optional<CompareResult> compare;
};

/// Writes metrics.csv, sweep.csv and compare.csv (header-only when the
/// section is empty) plus the optional detail files and sweep chart.
inline void emit_report(const Report& report, const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);
  write_file(out_dir / "metrics.csv", to_csv(metrics_table(report.metrics)));
  write_file(out_dir / "sweep.csv", to_csv(sweep_table(report.sweep)));
  write_file(out_dir / "compare.csv", to_csv(compare_table(report.compare)));
  if (!report.training.empty()) {
    write_file(out_dir / "training.csv", to_csv(training_table(report.training)));
  }
  if (report.sweep && !report.sweep->cells.empty()) {
    const std::string key = to_string(report.sweep->parameter);
    write_file(out_dir / "sweep_summary.csv", to_csv(sweep_summary_table(*report.sweep)));
    write_file(out_dir / ("sweep_" + key + ".svg"), sweep_svg(*report.sweep));
  }
  if (report.compare && !report.compare->cells.empty()) {
    write_file(out_dir / "compare_runs.csv", to_csv(compare_runs_table(*report.compare)));
    if (!report.compare->variance.empty()) {
      write_file(out_dir / "grad_variance.csv", to_csv(variance_table(*report.compare)));
    }
  }
}

}  // namespace hcirl
