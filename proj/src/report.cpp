#include "flowbench/report.hpp"

#include "flowbench/csv.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace flowbench {

namespace fs = std::filesystem;

namespace {

bool better(const ResultRecord& a, const ResultRecord& incumbent) {
  if (a.auc != incumbent.auc) return a.auc > incumbent.auc;
  return a.dims < incumbent.dims;
}

std::vector<ResultRecord> best_by(std::span<const ResultRecord> records,
                                  std::string (*group)(const ResultRecord&)) {
  std::vector<ResultRecord> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : records) {
    if (!r.is_mean() || r.failed) continue;
    const auto [it, inserted] = slot.emplace(group(r), out.size());
    if (inserted) {
      out.push_back(r);
    } else if (better(r, out[it->second])) {
      out[it->second] = r;
    }
  }
  return out;
}

std::string percent(double v) { return fmt::format("{:.2f}%", 100.0 * v); }

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

std::string safe(std::string_view name) {
  std::string out(name);
  for (char& ch : out) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_')) ch = '-';
  }
  return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Series {
  std::string name;
  std::vector<std::pair<int, double>> points;  // (dims, auc)
};

// Line chart with dimension counts spaced evenly along x.
std::string line_chart(const std::string& title, const std::vector<Series>& series) {
  std::set<int> xs;
  double lo = 1.0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xs.insert(x);
      lo = std::min(lo, y);
    }
  }
  lo = std::max(0.0, std::floor(lo * 10.0) / 10.0);
  const double hi = 1.0;
  const std::vector<int> xv(xs.begin(), xs.end());
  const double w = 520, h = 320, left = 60, right = 120, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](int x) {
    const auto i = std::find(xv.begin(), xv.end(), x) - xv.begin();
    return left + (xv.size() == 1 ? pw / 2 : pw * static_cast<double>(i) / static_cast<double>(xv.size() - 1));
  };
  auto py = [&](double y) { return top + ph * (1.0 - (y - lo) / std::max(hi - lo, 1e-9)); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"20\" font-size=\"13\">{}</text>\n",
      w, h, left, title);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, top + ph);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, top + ph,
                     left + pw);
  for (int t = 0; t <= 4; ++t) {
    const double y = lo + (hi - lo) * t / 4.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3f}</text>\n", left - 6, py(y) + 4, y);
  }
  for (int x : xv) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(x), top + ph + 16, x);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">dimensions</text>\n", left + pw / 2,
                     top + ph + 36);
  svg += fmt::format("<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">AUC</text>\n",
                     top + ph / 2, top + ph / 2);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (const auto& [x, y] : series[i].points) pts += fmt::format("{:.1f},{:.1f} ", px(x), py(y));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, pts);
    for (const auto& [x, y] : series[i].points) {
      svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n", px(x), py(y), color);
    }
    const double ly = top + 14.0 * static_cast<double>(i);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", left + pw + 16, ly,
                       color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", left + pw + 30, ly + 9, series[i].name);
  }
  return svg + "</svg>\n";
}

// Grouped bars: one group per model, one bar per dataset.
std::string bar_chart(const std::vector<ResultRecord>& best) {
  std::vector<std::string> models, datasets;
  for (const auto& r : best) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  }
  const double w = 120.0 + 90.0 * static_cast<double>(models.size()) + 140.0, h = 320, left = 60, top = 40,
               bottom = 50;
  const double ph = h - top - bottom;
  const double group_w = 90.0, bar_w = 70.0 / static_cast<double>(std::max<std::size_t>(1, datasets.size()));
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"20\" font-size=\"13\">Best AUC per classifier and dataset</text>\n",
      w, h, left);
  const double plot_right = left + group_w * static_cast<double>(models.size());
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, top + ph);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, top + ph,
                     plot_right);
  for (int t = 0; t <= 4; ++t) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2f}</text>\n", left - 6,
                       top + ph * (1.0 - t / 4.0) + 4, t / 4.0);
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    const double gx = left + group_w * static_cast<double>(m) + 10.0;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", gx + 35.0, top + ph + 16,
                       models[m]);
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto it = std::find_if(best.begin(), best.end(),
                                   [&](const auto& r) { return r.model == models[m] && r.dataset == datasets[d]; });
      if (it == best.end()) continue;
      const double bh = ph * std::clamp(it->auc, 0.0, 1.0);
      svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
                         gx + bar_w * static_cast<double>(d), top + ph - bh, bar_w - 2.0, bh,
                         kPalette[d % std::size(kPalette)]);
    }
  }
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const double ly = top + 14.0 * static_cast<double>(d);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", plot_right + 16, ly,
                       kPalette[d % std::size(kPalette)]);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", plot_right + 30, ly + 9, datasets[d]);
  }
  return svg + "</svg>\n";
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      s += fmt::format("{:<{}}", cells[c], width[c]);
      if (c + 1 < cells.size()) s += "  ";
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string cell_key(const ResultRecord& r) {
  return Cell{parse_fe_method(r.fe), r.dims, parse_classifier_kind(r.model)}.key(r.dataset);
}

}  // namespace

std::vector<ResultRecord> best_per_model(std::span<const ResultRecord> records) {
  return best_by(records, [](const ResultRecord& r) { return r.dataset + '\x1f' + r.model + '\x1f' + r.fe; });
}

std::vector<ResultRecord> best_per_dataset(std::span<const ResultRecord> records) {
  return best_by(records, [](const ResultRecord& r) { return r.dataset; });
}

void emit_plots(std::span<const ResultRecord> records, std::span<const DatasetVariance> variance,
                const fs::path& output_dir, bool svg) {
  // (dataset, model) -> fe -> sorted (dims, auc)
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<std::pair<int, double>>>> sweeps;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : records) {
    if (!r.is_mean() || r.failed) continue;
    const std::pair<std::string, std::string> key{r.dataset, r.model};
    if (!sweeps.contains(key)) order.push_back(key);
    sweeps[key][r.fe].emplace_back(r.dims, r.auc);
  }
  for (const auto& key : order) {
    std::vector<Series> series;
    for (auto& [fe, pts] : sweeps[key]) {
      std::sort(pts.begin(), pts.end());
      std::string csv = "dims,auc\n";
      for (const auto& [d, auc] : pts) csv += fmt::format("{},{}\n", d, auc);
      write_file(output_dir / "sweeps" / fmt::format("{}_{}_{}.csv", safe(key.first), key.second, fe), csv);
      series.push_back({fe, pts});
    }
    if (svg) {
      write_file(output_dir / "sweeps" / fmt::format("{}_{}.svg", safe(key.first), key.second),
                 line_chart(fmt::format("{}: {} AUC by dimension count", key.first, key.second), series));
    }
  }

  for (const auto& v : variance) {
    write_variance_csv(v.pca, (output_dir / "variance" / fmt::format("{}_pca.csv", safe(v.dataset))).string());
    if (v.lda) {
      write_variance_csv(*v.lda, (output_dir / "variance" / fmt::format("{}_lda.csv", safe(v.dataset))).string());
    }
    if (v.pca.cumulative_fraction.size() > 0) {
      std::string csv = "dimension_index,cumulative_fraction\n";
      for (Index i = 0; i < v.pca.cumulative_fraction.size(); ++i) {
        csv += fmt::format("{},{}\n", i + 1, v.pca.cumulative_fraction(i));
      }
      write_file(output_dir / "variance" / fmt::format("{}_pca_cumulative.csv", safe(v.dataset)), csv);
    }
  }

  // Best AUC per (model, dataset) over every extractor and width.
  const auto best =
      best_by(records, [](const ResultRecord& r) { return r.model + '\x1f' + r.dataset; });
  std::vector<ResultRecord> sorted = best;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.model < b.model; });
  std::string csv = "model,dataset,fe,dims,auc,acc,f1,dr,far\n";
  for (const auto& r : sorted) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.model, csv_escape(r.dataset), r.fe, r.dims, r.auc, r.m.acc,
                       r.m.f1, r.m.dr, r.m.far);
  }
  write_file(output_dir / "summary" / "cross_dataset.csv", csv);
  if (svg && !best.empty()) write_file(output_dir / "summary" / "cross_dataset.svg", bar_chart(best));
}

std::string render_summary(std::span<const ResultRecord> records,
                           const std::map<std::string, AttackBreakdown>& per_attack) {
  std::size_t means = 0, failed = 0;
  for (const auto& r : records) {
    if (r.is_mean()) ++means;
    if (r.failed) ++failed;
  }
  std::string out = "flowbench summary\n\n";
  out += fmt::format("Result rows: {} ({} cells, {} failed)\n", records.size(), means, failed);

  const auto best = best_per_model(records);
  std::vector<std::string> datasets;
  for (const auto& r : best) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
  }
  for (const auto& ds : datasets) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : best) {
      if (r.dataset != ds) continue;
      rows.push_back({r.model, r.fe, std::to_string(r.dims), percent(r.m.acc), percent(r.m.f1), percent(r.m.dr),
                      percent(r.m.far), percent(r.m.precision), fmt::format("{:.4f}", r.auc)});
    }
    out += fmt::format("\nBest results per classifier and extractor: {}\n\n", ds);
    out += table({"Model", "FE", "DIM", "ACC", "F1", "DR", "FAR", "Precision", "AUC"}, rows);
  }

  if (failed > 0) {
    out += "\nFailed cells\n\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : records) {
      if (r.failed) rows.push_back({r.dataset, r.model, r.fe, std::to_string(r.dims), r.error});
    }
    out += table({"Dataset", "Model", "FE", "DIM", "Error"}, rows);
  }

  for (const auto& b : best_per_dataset(records)) {
    const auto it = per_attack.find(cell_key(b));
    if (it == per_attack.end() || it->second.empty()) continue;
    out += fmt::format("\nDetection rate per attack type: {} ({} on {} with {} dimensions)\n\n", b.dataset, b.model,
                       b.fe, b.dims);
    std::vector<std::vector<std::string>> rows;
    for (const auto& [name, e] : it->second) {
      rows.push_back({name, std::to_string(e.actual), std::to_string(e.detected), percent(e.dr)});
    }
    out += table({"Attack", "Actual", "Detected", "DR"}, rows);
  }
  return out;
}

std::string report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw Error("report: no run directories given");
  std::vector<ResultRecord> records;
  std::map<std::string, AttackBreakdown> per_attack;
  for (const auto& dir : run_dirs) {
    const auto path = dir / "results.csv";
    if (!fs::exists(path)) throw Error(fmt::format("report: '{}' has no results.csv", dir.string()));
    auto rows = read_results_csv(path.string());
    for (const auto& r : rows) {
      if (!r.is_mean() || r.failed) continue;
      const auto key = cell_key(r);
      const auto attack = dir / "cells" / (key + ".attack.csv");
      if (fs::exists(attack)) per_attack[key] = read_per_attack_csv(attack);
    }
    records.insert(records.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  emit_plots(records, {}, out_dir, true);
  std::string text = render_summary(records, per_attack);
  write_file(out_dir / "summary.txt", text);
  return text;
}

void write_per_attack_csv(const fs::path& path, const AttackBreakdown& breakdown) {
  std::string csv = "attack_type,actual,detected,dr\n";
  for (const auto& [name, e] : breakdown) {
    csv += fmt::format("{},{},{},{}\n", csv_escape(name), e.actual, e.detected, e.dr);
  }
  write_file(path, csv);
}

AttackBreakdown read_per_attack_csv(const fs::path& path) {
  const RawTable t = read_csv(path.string());
  const auto c_name = t.require_column("attack_type"), c_actual = t.require_column("actual"),
             c_detected = t.require_column("detected");
  AttackBreakdown out;
  for (const auto& row : t.rows) {
    AttackDr e;
    e.actual = std::stoll(row[c_actual]);
    e.detected = std::stoll(row[c_detected]);
    e.dr = e.actual > 0 ? static_cast<double>(e.detected) / static_cast<double>(e.actual) : 0.0;
    out[row[c_name]] = e;
  }
  return out;
}

}  // namespace flowbench
