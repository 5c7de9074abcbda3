// avwake/report.cpp

// Copyright 2026  The avwake authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "avwake/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "avwake/errors.hpp"

namespace avwake {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::optional<std::string> ReadFile(const fs::path& path) {
  std::ifstream is(path);
  if (!is) return std::nullopt;
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct EvalTable {
  // stratum -> (frr_pct or -1, far_pct or -1)
  std::map<std::string, std::pair<double, double>> strata;
};

std::optional<EvalTable> ParseEvalCsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  EvalTable table;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // stratum,n_wake,n_nonwake,n_fr,n_fa,frr_pct,far_pct
      continue;
    }
    const auto f = SplitCsvLine(line);
    if (f.size() != 7) return std::nullopt;
    const double frr = f[5] == "-" ? -1.0 : std::stod(f[5]);
    const double far = f[6] == "-" ? -1.0 : std::stod(f[6]);
    table.strata[f[0]] = {frr, far};
  }
  if (!header_seen) return std::nullopt;
  return table;
}

struct SparsityTable {
  std::map<std::string, double> pct_by_kind;  // conv/lstm/fc/total
};

std::optional<SparsityTable> ParseSparsityCsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  SparsityTable table;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = SplitCsvLine(line);
    if (f.size() != 4) return std::nullopt;
    table.pct_by_kind[f[0]] = std::stod(f[3]);
  }
  if (table.pct_by_kind.empty()) return std::nullopt;
  return table;
}

std::string FormatPct(double v) {
  if (v < 0.0) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

struct SystemArtifacts {
  std::string name;
  std::optional<EvalTable> eval;
  std::optional<SparsityTable> sparsity;
  std::optional<std::string> history;
};

}  // namespace

std::string FarCurveSvg(const std::string& history_csv_text, const std::string& title) {
  std::istringstream is(history_csv_text);
  std::string line;
  if (!std::getline(is, line)) throw ContractError("empty history");
  const auto header = SplitCsvLine(line);
  std::vector<size_t> far_cols;
  std::vector<std::string> far_names;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("dev_far_", 0) == 0) {
      far_cols.push_back(i);
      far_names.push_back(header[i].substr(8));
    }
  }
  std::vector<int> ts;
  std::vector<std::vector<double>> series(far_cols.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    ts.push_back(std::stoi(f[0]));
    for (size_t s = 0; s < far_cols.size(); ++s) {
      const std::string& cell = f[far_cols[s]];
      series[s].push_back(cell == "-" ? 0.0 : 100.0 * std::stod(cell));
    }
  }
  if (ts.empty()) throw ContractError("history has no rows");

  const double width = 640, height = 400;
  const double ml = 60, mr = 20, mt = 40, mb = 45;
  double ymax = 1.0;
  for (const auto& s : series) {
    for (double v : s) ymax = std::max(ymax, v);
  }
  ymax *= 1.05;
  const double tmin = ts.front(), tmax = std::max(ts.back(), ts.front() + 1);
  auto px = [&](double t) { return ml + (t - tmin) / (tmax - tmin) * (width - ml - mr); };
  auto py = [&](double v) { return height - mb - v / ymax * (height - mt - mb); };

  const char* colors[] = {"#c0392b", "#2471a3", "#1e8449", "#8e44ad", "#b7950b"};
  std::ostringstream os;
  char buf[64];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  // axes
  std::snprintf(buf, sizeof(buf), "%.1f", ymax / 1.05);
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
     << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"14\" y=\"" << (mt + height - mb) / 2
     << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
     << (mt + height - mb) / 2 << ")\" text-anchor=\"middle\">dev FAR (%)</text>\n";
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 10
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        "pruning iteration</text>\n";
  for (int grid = 0; grid <= 4; ++grid) {
    const double v = ymax / 1.05 * grid / 4.0;
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(v) + 4
       << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << buf
       << "</text>\n";
  }
  for (size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[s % 5]
       << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < ts.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(ts[i]), py(series[s][i]));
      os << buf;
    }
    os << "\"/>\n";
    os << "<text x=\"" << width - mr - 4 << "\" y=\"" << mt + 16 * (s + 1)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" fill=\""
       << colors[s % 5] << "\">snr " << far_names[s] << " dB</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

ReportOutcome WriteRunReport(const std::string& run_dir, const std::string& out_dir) {
  ReportOutcome outcome;
  std::vector<SystemArtifacts> systems;
  if (fs::exists(run_dir)) {
    std::vector<std::string> names;
    for (const auto& de : fs::directory_iterator(run_dir)) {
      if (de.is_directory()) names.push_back(de.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
      SystemArtifacts sys;
      sys.name = name;
      const fs::path dir = fs::path(run_dir) / name;
      if (auto text = ReadFile(dir / "eval_test.csv")) sys.eval = ParseEvalCsv(*text);
      if (auto text = ReadFile(dir / "sparsity.csv")) sys.sparsity = ParseSparsityCsv(*text);
      sys.history = ReadFile(dir / "history.csv");
      if (sys.eval || sys.sparsity || sys.history) systems.push_back(std::move(sys));
    }
  }
  fs::create_directories(out_dir);

  // Per-modality FAR table at the operating threshold.
  {
    std::vector<const SystemArtifacts*> with_eval;
    for (const auto& s : systems) {
      if (s.eval) with_eval.push_back(&s);
    }
    if (with_eval.empty()) {
      outcome.skipped.push_back("far_by_modality.csv: no eval_test.csv under " + run_dir);
    } else {
      std::vector<std::string> strata;
      for (const auto* s : with_eval) {
        for (const auto& [name, fr] : s->eval->strata) {
          if (name != "all" && std::find(strata.begin(), strata.end(), name) == strata.end()) {
            strata.push_back(name);
          }
        }
      }
      std::sort(strata.begin(), strata.end(), [](const std::string& a, const std::string& b) {
        const bool na = a != "clean", nb = b != "clean";
        if (na != nb) return na < nb;
        if (!na) return false;
        return std::stoi(a) < std::stoi(b);
      });
      std::ostringstream os;
      os << "system,one_minus_frr_pct";
      for (const auto& s : strata) os << ",far_pct_" << s;
      os << '\n';
      for (const auto* s : with_eval) {
        const auto all = s->eval->strata.find("all");
        const double frr = (all != s->eval->strata.end()) ? all->second.first : -1.0;
        os << s->name << ',' << FormatPct(frr < 0 ? -1.0 : 100.0 - frr);
        for (const auto& st : strata) {
          const auto it = s->eval->strata.find(st);
          os << ',' << FormatPct(it == s->eval->strata.end() ? -1.0 : it->second.second);
        }
        os << '\n';
      }
      WriteText(fs::path(out_dir) / "far_by_modality.csv", os.str());
      outcome.written.push_back("far_by_modality.csv");
    }
  }

  // Pruning comparison: FAR columns plus whole-scope pruned share.
  {
    std::vector<const SystemArtifacts*> rows;
    for (const auto& s : systems) {
      if (s.eval && s.sparsity) rows.push_back(&s);
    }
    if (rows.empty()) {
      outcome.skipped.push_back(
          "pruning_comparison.csv: need eval_test.csv and sparsity.csv");
    } else {
      std::vector<std::string> strata;
      for (const auto* s : rows) {
        for (const auto& [name, fr] : s->eval->strata) {
          if (name != "all" && name != "clean" &&
              std::find(strata.begin(), strata.end(), name) == strata.end()) {
            strata.push_back(name);
          }
        }
      }
      std::sort(strata.begin(), strata.end(),
                [](const std::string& a, const std::string& b) {
                  return std::stoi(a) < std::stoi(b);
                });
      std::ostringstream os;
      os << "system,one_minus_frr_pct";
      for (const auto& s : strata) os << ",far_pct_" << s;
      os << ",pruned_pct\n";
      for (const auto* s : rows) {
        const auto all = s->eval->strata.find("all");
        const double frr = (all != s->eval->strata.end()) ? all->second.first : -1.0;
        os << s->name << ',' << FormatPct(frr < 0 ? -1.0 : 100.0 - frr);
        for (const auto& st : strata) {
          const auto it = s->eval->strata.find(st);
          os << ',' << FormatPct(it == s->eval->strata.end() ? -1.0 : it->second.second);
        }
        const auto total = s->sparsity->pct_by_kind.find("total");
        os << ',' << FormatPct(total == s->sparsity->pct_by_kind.end() ? -1.0
                                                                       : total->second);
        os << '\n';
      }
      WriteText(fs::path(out_dir) / "pruning_comparison.csv", os.str());
      outcome.written.push_back("pruning_comparison.csv");
    }
  }

  // Per-layer-type pruned share.
  {
    std::vector<const SystemArtifacts*> rows;
    for (const auto& s : systems) {
      if (s.sparsity) rows.push_back(&s);
    }
    if (rows.empty()) {
      outcome.skipped.push_back("sparsity_by_layer_type.csv: no sparsity.csv");
    } else {
      std::ostringstream os;
      os << "system,conv_pct,lstm_pct,fc_pct,total_pct\n";
      for (const auto* s : rows) {
        auto pct = [&](const char* kind) {
          const auto it = s->sparsity->pct_by_kind.find(kind);
          return it == s->sparsity->pct_by_kind.end() ? -1.0 : it->second;
        };
        os << s->name << ',' << FormatPct(pct("conv")) << ',' << FormatPct(pct("lstm"))
           << ',' << FormatPct(pct("fc")) << ',' << FormatPct(pct("total")) << '\n';
      }
      WriteText(fs::path(out_dir) / "sparsity_by_layer_type.csv", os.str());
      outcome.written.push_back("sparsity_by_layer_type.csv");
    }
  }

  // FAR-vs-iteration curves.
  {
    bool any = false;
    for (const auto& s : systems) {
      if (!s.history) continue;
      const std::string file = "far_curve_" + s.name + ".svg";
      WriteText(fs::path(out_dir) / file, FarCurveSvg(*s.history, s.name));
      outcome.written.push_back(file);
      any = true;
    }
    if (!any) outcome.skipped.push_back("far_curve_*.svg: no history.csv");
  }

  return outcome;
}

}  // namespace avwake
