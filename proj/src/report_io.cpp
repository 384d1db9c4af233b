#include "popsim/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "popsim/error.hpp"

namespace popsim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw InvalidArgument("malformed number '" + s + "' in report");
  return v;
}

}  // namespace

std::string to_string(PropagationMethod m) {
  return m == PropagationMethod::angular_spectrum ? "angular_spectrum" : "fraunhofer";
}

std::string to_string(Coherence c) { return c == Coherence::coherent ? "coherent" : "incoherent"; }

std::string report_stem(const SpreadReport& r) { return r.scenario + "_" + to_string(r.model); }

void write_report_csv(std::ostream& os, const SpreadReport& r) {
  os << "# format=popsim-spread-csv/1\n";
  os << "# scenario=" << r.scenario << "\n";
  os << "# model=" << to_string(r.model) << "\n";
  os << "# method=" << to_string(r.method) << "\n";
  os << "# coherence=" << to_string(r.coherence) << "\n";
  os << "# slit_width_m=" << fmt(r.slit_width) << "\n";
  os << "# reference_hbar_over_d=" << fmt(r.reference) << "\n";
  os << "# momentum_per_metre=" << fmt(r.momentum_per_metre) << "\n";
  os << "# hwhm=" << fmt(r.spread.hwhm) << "\n";
  os << "# rms_truncated=" << fmt(r.spread.rms_truncated) << "\n";
  os << "# p95_halfwidth=" << fmt(r.spread.p95_halfwidth) << "\n";
  os << "# fresnel_number=" << fmt(r.fresnel_number) << "\n";
  os << "# window_n=" << r.window_n << "\n";
  os << "# click_n=" << r.click_n << "\n";
  os << "# window_spacing_m=" << fmt(r.window_spacing) << "\n";
  os << "# launch_n=" << r.launch_n << "\n";
  os << "# components=" << r.components << "\n";
  os << "y_m,p_y,probability\n";
  const std::vector<double> p = r.p_y();
  for (std::size_t i = 0; i < r.positions.size(); ++i)
    os << fmt(r.positions[i]) << ',' << fmt(p[i]) << ',' << fmt(r.probability[i]) << '\n';
}

SpreadReport read_report_csv(std::istream& is) {
  SpreadReport r;
  std::map<std::string, std::string> meta;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!header) {
      if (line != "y_m,p_y,probability") throw InvalidArgument("unexpected report header '" + line + "'");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string y, p, prob;
    if (!std::getline(ss, y, ',') || !std::getline(ss, p, ',') || !std::getline(ss, prob, ','))
      throw InvalidArgument("malformed report row '" + line + "'");
    r.positions.push_back(parse_double(y));
    r.probability.push_back(parse_double(prob));
  }
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = meta.find(k);
    if (it == meta.end()) throw InvalidArgument("report lacks metadata '" + k + "'");
    return it->second;
  };
  r.scenario = get("scenario");
  r.model = parse_detection_model(get("model"));
  r.method = get("method") == "fraunhofer" ? PropagationMethod::fraunhofer : PropagationMethod::angular_spectrum;
  r.coherence = get("coherence") == "incoherent" ? Coherence::incoherent : Coherence::coherent;
  r.slit_width = parse_double(get("slit_width_m"));
  r.reference = parse_double(get("reference_hbar_over_d"));
  r.momentum_per_metre = parse_double(get("momentum_per_metre"));
  r.spread = {parse_double(get("hwhm")), parse_double(get("rms_truncated")), parse_double(get("p95_halfwidth"))};
  r.fresnel_number = parse_double(get("fresnel_number"));
  r.window_n = std::stoull(get("window_n"));
  r.click_n = std::stoull(get("click_n"));
  r.window_spacing = parse_double(get("window_spacing_m"));
  r.launch_n = std::stoull(get("launch_n"));
  r.components = std::stoull(get("components"));
  return r;
}

void write_clicks_csv(std::ostream& os, const SpreadReport& r, const std::vector<std::uint64_t>& counts) {
  os << "# scenario=" << r.scenario << "\n# model=" << to_string(r.model) << "\n";
  os << "y_m,p_y,counts\n";
  const std::vector<double> p = r.p_y();
  for (std::size_t i = 0; i < r.positions.size(); ++i)
    os << fmt(r.positions[i]) << ',' << fmt(p[i]) << ',' << counts[i] << '\n';
}

nlohmann::json timing_json(const TimingReport& t) {
  return {{"condition1_ok", t.condition1_ok},
          {"condition1_residual_m", t.condition1_residual},
          {"condition2_ok", t.condition2_ok},
          {"condition2_margin_m", t.condition2_margin},
          {"tolerance_m", t.tolerance}};
}

nlohmann::json imaging_json(const std::optional<ImagingReport>& i) {
  if (!i) return nullptr;
  return {{"object_distance_m", i->object_distance},
          {"image_distance_m", i->image_distance},
          {"focal_length_m", i->focal_length},
          {"residual_per_m", i->residual},
          {"required_image_distance_m", i->required_image_distance},
          {"magnification", i->magnification},
          {"satisfied", i->satisfied}};
}

nlohmann::json report_summary(const SpreadReport& r, const ScenarioResult& context) {
  nlohmann::json j;
  j["format"] = "popsim-spread-summary/1";
  j["scenario"] = r.scenario;
  j["model"] = to_string(r.model);
  j["spreads"] = {{"hwhm", r.spread.hwhm}, {"rms_truncated", r.spread.rms_truncated},
                  {"p95_halfwidth", r.spread.p95_halfwidth}};
  j["reference_hbar_over_d"] = r.reference;
  j["ratios"] = {{"hwhm", r.spread.hwhm / r.reference},
                 {"rms_truncated", r.spread.rms_truncated / r.reference},
                 {"p95_halfwidth", r.spread.p95_halfwidth / r.reference}};
  j["timing"] = timing_json(context.timing);
  j["imaging"] = imaging_json(context.imaging);
  j["provenance"] = {{"method", to_string(r.method)},
                     {"coherence", to_string(r.coherence)},
                     {"slit_width_m", r.slit_width},
                     {"momentum_per_metre", r.momentum_per_metre},
                     {"fresnel_number", r.fresnel_number},
                     {"window_n", r.window_n},
                     {"click_n", r.click_n},
                     {"window_spacing_m", r.window_spacing},
                     {"launch_n", r.launch_n},
                     {"components", r.components},
                     {"rms_mass_window", kRmsMassWindow}};
  return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace popsim
