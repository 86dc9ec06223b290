#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsd/pipeline.hpp"

namespace tsd {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string join_pipe(const json& arr) {
  std::string out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (i) out += '|';
    if (arr[i].is_string()) out += arr[i].get<std::string>();
    else out += arr[i].dump();
  }
  return out;
}

std::string num_or_empty(const json& v) {
  if (v.is_null()) return "";
  std::ostringstream out;
  out.precision(6);
  out << v.get<double>();
  return out.str();
}

void write_clustering_csv(const json& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "class,mode,ari,nmi,purity,k,gt_k,sizes,dtw_intra,dtw_inter,dtw_frac,silhouette,"
         "size_entropy,var_s,var_i,error\n";
  for (const json& e : report.at("clusterings")) {
    out << e.at("class").get<int>() << ',' << e.at("mode").get<std::string>() << ',';
    if (e.at("error").is_null()) {
      const json& u = e.at("uninformed");
      out << num_or_empty(e.at("ari")) << ',' << num_or_empty(e.at("nmi")) << ','
          << num_or_empty(e.at("purity")) << ',' << e.at("k").get<int>() << ','
          << e.at("gt_k").get<int>() << ',' << join_pipe(e.at("sizes")) << ','
          << num_or_empty(u.at("dtw_intra_mean")) << ',' << num_or_empty(u.at("dtw_inter_mean"))
          << ',' << num_or_empty(u.at("dtw_frac_mean")) << ',' << num_or_empty(u.at("silhouette"))
          << ',' << num_or_empty(u.at("size_entropy")) << ',' << num_or_empty(u.at("var_s_mean"))
          << ',' << num_or_empty(u.at("var_i_mean")) << ',';
    } else {
      out << ",,,,,,,,,,,,," << csv_escape(e.at("error").get<std::string>());
    }
    out << '\n';
  }
}

void write_matching_csv(const json& report, const fs::path& path) {
  std::size_t repetitions = 0;
  for (const json& e : report.at("clusterings")) {
    if (e.at("error").is_null() && e.contains("matching") && !e.at("matching").is_null())
      repetitions = std::max(repetitions, e.at("matching").at("runs").size());
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "class,mode";
  for (std::size_t r = 1; r <= repetitions; ++r) out << ",r_" << r;
  out << ",result,ground_truth,identified\n";
  for (const json& e : report.at("clusterings")) {
    if (!e.at("error").is_null() || !e.contains("matching") || e.at("matching").is_null()) continue;
    const json& m = e.at("matching");
    out << e.at("class").get<int>() << ',' << e.at("mode").get<std::string>();
    for (std::size_t r = 0; r < repetitions; ++r) {
      out << ',';
      if (r < m.at("runs").size()) out << join_pipe(m.at("runs")[r]);
    }
    out << ',' << join_pipe(m.at("result")) << ',' << join_pipe(m.at("ground_truth")) << ','
        << csv_escape(m.at("identified_str").get<std::string>()) << '\n';
  }
}

void write_correlations_csv(const json& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "uninformed,informed,rho,p,n\n";
  for (const json& c : report.at("correlations")) {
    out << c.at("uninformed").get<std::string>() << ',' << c.at("informed").get<std::string>()
        << ',' << num_or_empty(c.at("rho")) << ',' << num_or_empty(c.at("p")) << ','
        << c.at("n").get<std::size_t>() << '\n';
  }
}

void write_centroid_svg(const json& channels, const fs::path& path) {
  const double width = 640.0, height = 240.0, margin = 24.0;

  std::vector<std::vector<double>> series;
  for (const json& ch : channels) series.push_back(ch.get<std::vector<double>>());
  if (series.empty() || series[0].empty()) return;

  double lo = series[0][0], hi = series[0][0];
  for (const auto& ch : series) {
    for (double v : ch) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const std::size_t n = series[0].size();

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\" stroke=\"#999\"/>\n";
  const char* colors[2] = {"#1f77b4", "#ff7f0e"};
  out.precision(2);
  out << std::fixed;
  for (std::size_t c = 0; c < series.size() && c < 2; ++c) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[c] << "\" stroke-width=\"1.5\""
        << (c == 1 ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
    for (std::size_t t = 0; t < series[c].size(); ++t) {
      const double x =
          margin + (width - 2 * margin) * static_cast<double>(t) / static_cast<double>(n - 1);
      const double y =
          height - margin - (height - 2 * margin) * (series[c][t] - lo) / (hi - lo);
      out << x << ',' << y << ' ';
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace

void emit_report(const RunReport& report, const std::string& out_dir, bool plots) {
  fs::create_directories(out_dir);
  const fs::path base(out_dir);

  {
    std::ofstream out(base / "report.json");
    if (!out) throw std::runtime_error("cannot write report.json");
    out << report.dump(2) << "\n";
  }
  write_clustering_csv(report, base / "clustering.csv");
  write_matching_csv(report, base / "matching.csv");
  write_correlations_csv(report, base / "correlations.csv");

  if (plots) {
    fs::create_directories(base / "plots");
    for (const json& e : report.at("clusterings")) {
      if (!e.at("error").is_null()) continue;
      const json& centroids = e.at("centroids");
      for (std::size_t j = 0; j < centroids.size(); ++j) {
        std::ostringstream name;
        name << "class" << e.at("class").get<int>() << "_" << e.at("mode").get<std::string>()
             << "_cluster" << j << ".svg";
        write_centroid_svg(centroids[j], base / "plots" / name.str());
      }
    }
  }
}

}  // namespace tsd
