#include "ssb/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ssb/errors.hpp"

namespace ssb {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

std::string where(int line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column + 1);
}

// Next non-blank, non-comment line; false at end of input.
bool next_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    line = t;
    return true;
  }
  return false;
}

double parse_time(const std::string& cell, int line, std::size_t col) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr == first) throw ParseError(where(line, col) + ": '" + cell + "' is not a time");
  for (const char* p = ptr; p != last; ++p) {
    if (!std::isalpha(static_cast<unsigned char>(*p)) && *p != ' ') {
      throw ParseError(where(line, col) + ": unexpected unit text in '" + cell + "'");
    }
  }
  return v;
}

int parse_int(const std::string& cell, const std::string& context) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(context + ": '" + cell + "' is not an integer count");
  }
  return v;
}

double parse_double(const std::string& cell, const std::string& context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) throw ParseError(context + ": '" + cell + "' is not a number");
  return v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_frequencies(std::ostream& out, const std::vector<FrequencyRow>& rows, const char* model) {
  for (const auto& r : rows) out << model << ',' << r.count << ',' << r.n << ',' << format_double(r.fraction) << '\n';
}

json spectrum_json(const Spectrum& s) {
  return {{"first_fraction", s.cum_frac.front()}, {"cum_frac", s.cum_frac}, {"eigenvalues", s.eigenvalues}};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CountDataset parse_dataset_csv(std::istream& in, int mass) {
  std::string line;
  int line_no = 0;
  if (!next_line(in, line, line_no)) throw ParseError("dataset is empty");
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  const auto header = split(line, delim);
  std::vector<double> schedule;
  for (std::size_t c = 0; c < header.size(); ++c) schedule.push_back(parse_time(header[c], line_no, c));

  std::vector<std::vector<int>> counts(schedule.size());
  while (next_line(in, line, line_no)) {
    const auto cells = split(line, delim);
    if (cells.size() > schedule.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": " + std::to_string(cells.size()) +
                       " cells but the header has " + std::to_string(schedule.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty() || cells[c] == ".") continue;
      const int k = parse_int(cells[c], where(line_no, c));
      if (k < 0 || k > mass) {
        throw ParseError(where(line_no, c) + ": count " + cells[c] + " outside [0, " + std::to_string(mass) + "]");
      }
      counts[c].push_back(k);
    }
  }
  try {
    return CountDataset(std::move(schedule), std::move(counts), mass);
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid dataset: ") + e.what());
  }
}

CountDataset read_dataset_csv(const std::filesystem::path& path, int mass) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_dataset_csv(in, mass);
}

void write_dataset_csv(std::ostream& out, const CountDataset& data) {
  const auto schedule = data.schedule();
  std::size_t rows = 0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out << (i ? "," : "") << format_double(schedule[i]);
    rows = std::max(rows, data.counts_at(i).size());
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const auto col = data.counts_at(i);
      if (i) out << ',';
      if (r < col.size()) out << col[r];
      else out << '.';
    }
    out << '\n';
  }
}

json params_to_json(const AnyParams& params) {
  json j = json::object();
  for (const auto& [name, value] : to_named(params)) j[name] = value;
  return j;
}

AnyParams params_from_json(const json& j, ModelKind kind) {
  if (!j.is_object()) throw ParseError("parameters must be a JSON object");
  NamedValues raw;
  for (const auto& [name, value] : j.items()) {
    if (!value.is_number()) throw ParseError("parameter '" + name + "' is not a number");
    raw[name] = value.get<double>();
  }
  return validate_params(raw, kind);
}

json fit_to_json(const FitResult& fit) {
  json j;
  j["model"] = std::string(to_string(fit.model));
  json est = json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) est[fit.names[i]] = fit.estimates[i];
  j["estimates"] = est;
  j["parameter_order"] = fit.names;
  j["loglik"] = fit.loglik;
  j["n_params"] = fit.n_params;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  json boundary = json::array();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    if (fit.at_boundary[i]) boundary.push_back(fit.names[i]);
  }
  j["at_boundary"] = boundary;
  if (fit.std_errors) {
    json se = json::object();
    for (std::size_t i = 0; i < fit.names.size(); ++i) se[fit.names[i]] = number_or_null((*fit.std_errors)[i]);
    j["std_errors"] = se;
  } else {
    j["std_errors"] = nullptr;
  }
  if (fit.info) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < fit.info->rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < fit.info->cols(); ++c) row.push_back(number_or_null((*fit.info)(r, c)));
      rows.push_back(row);
    }
    j["info"] = rows;
  } else {
    j["info"] = nullptr;
  }
  json trace = json::array();
  for (const auto& t : fit.trace) trace.push_back({{"step", t.step}, {"loglik", number_or_null(t.loglik)}});
  j["trace"] = trace;
  return j;
}

FitResult fit_from_json(const json& j) {
  try {
    FitResult fit;
    fit.model = parse_model_kind(j.at("model").get<std::string>());
    fit.names = j.at("parameter_order").get<std::vector<std::string>>();
    for (const auto& n : fit.names) fit.estimates.push_back(j.at("estimates").at(n).get<double>());
    fit.loglik = j.at("loglik").get<double>();
    fit.n_params = j.at("n_params").get<int>();
    fit.converged = j.at("converged").get<bool>();
    fit.iterations = j.value("iterations", 0);
    fit.at_boundary.assign(fit.names.size(), false);
    for (const auto& b : j.value("at_boundary", json::array())) {
      for (std::size_t i = 0; i < fit.names.size(); ++i) fit.at_boundary[i] = fit.at_boundary[i] || fit.names[i] == b;
    }
    if (!j.at("std_errors").is_null()) {
      std::vector<double> se;
      for (const auto& n : fit.names) {
        const auto& v = j.at("std_errors").at(n);
        se.push_back(v.is_null() ? std::nan("") : v.get<double>());
      }
      fit.std_errors = se;
    }
    if (!j.at("info").is_null()) {
      const auto& rows = j.at("info");
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd info(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
          const auto& v = rows.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c));
          info(r, c) = v.is_null() ? std::nan("") : v.get<double>();
        }
      }
      fit.info = info;
    }
    for (const auto& t : j.value("trace", json::array())) {
      fit.trace.push_back({t.at("step").get<std::string>(), t.at("loglik").is_null() ? std::nan("") : t.at("loglik").get<double>()});
    }
    return fit;
  } catch (const json::exception& e) {
    throw ParseError(std::string("fit JSON: ") + e.what());
  }
}

void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) return;
  const int horizon = trajectories.front().horizon();
  out << "trajectory,lead_time";
  for (int tau = 0; tau <= horizon; ++tau) out << ",tau" << tau;
  out << '\n';
  for (std::size_t h = 0; h < trajectories.size(); ++h) {
    const auto& t = trajectories[h];
    if (t.horizon() != horizon) throw GridMismatch("trajectories have different horizons");
    out << h << ',' << format_double(t.lead_time());
    for (int c : t.counts()) out << ',' << c;
    out << '\n';
  }
}

std::vector<Trajectory> parse_trajectories_csv(std::istream& in, int mass) {
  std::string line;
  int line_no = 0;
  std::vector<Trajectory> out;
  if (!next_line(in, line, line_no)) return out;
  const auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "trajectory" || header[1] != "lead_time") {
    throw ParseError("line " + std::to_string(line_no) + ": expected a trajectory header");
  }
  while (next_line(in, line, line_no)) {
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw ParseError("line " + std::to_string(line_no) + ": wrong number of cells");
    std::vector<int> counts;
    for (std::size_t c = 2; c < cells.size(); ++c) counts.push_back(parse_int(cells[c], where(line_no, c)));
    try {
      out.emplace_back(std::move(counts), mass, parse_double(cells[1], where(line_no, 1)));
    } catch (const DomainError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_bic_csv(std::ostream& out, const std::vector<BicRow>& rows) {
  out << "model,loglik,n_params,delta_bic\n";
  for (const auto& r : rows) {
    out << to_string(r.model) << ',' << format_double(r.loglik) << ',' << r.n_params << ',' << format_double(r.delta)
        << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const ReplicateStudy& study) {
  out << "replicate,ok,lambda0,gamma0,alpha,beta,lambda,gamma,loglik,converged,error\n";
  for (const auto& r : study.rows) {
    out << r.replicate << ',' << (r.ok ? 1 : 0);
    if (r.ok) {
      for (double v : {r.lambda0, r.gamma0, r.alpha, r.beta, r.lambda, r.gamma, r.loglik}) out << ',' << format_double(v);
      out << ',' << (r.converged ? 1 : 0) << ",\n";
    } else {
      std::string msg = r.error;
      for (auto& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      out << ",,,,,,,,," << msg << '\n';
    }
  }
}

void write_replicate_summary_csv(std::ostream& out, const ReplicateStudy& study) {
  out << "parameter,mean,sd\n";
  for (const auto& s : study.summary) {
    out << s.name << ',' << format_double(s.mean) << ',' << (std::isnan(s.sd) ? std::string() : format_double(s.sd))
        << '\n';
  }
}

void write_report(const std::filesystem::path& dir, const DynamicsReport& report, const json& extra) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream out;
    out << "tau,ssb,re\n";
    for (std::size_t t = 0; t < report.mean_ssb.size(); ++t) {
      out << t << ',' << format_double(report.mean_ssb[t]) << ',' << format_double(report.mean_re[t]) << '\n';
    }
    write_text(dir / "mean_curves.csv", out.str());
  }
  for (const auto& cs : report.cross_sections) {
    std::ostringstream out;
    out << "model,count,n,fraction\n";
    write_frequencies(out, cs.ssb, "SSB");
    write_frequencies(out, cs.re, "LRM_RE");
    write_text(dir / ("cross_section_" + std::to_string(cs.hour) + ".csv"), out.str());
  }
  for (const auto& [name, s] : {std::pair{"ssb", &report.spectrum_ssb}, std::pair{"re", &report.spectrum_re}}) {
    std::ostringstream out;
    out << "component,eigenvalue,cum_frac\n";
    for (std::size_t i = 0; i < s->eigenvalues.size(); ++i) {
      out << i + 1 << ',' << format_double(s->eigenvalues[i]) << ',' << format_double(s->cum_frac[i]) << '\n';
    }
    write_text(dir / (std::string("spectrum_") + name + ".csv"), out.str());
  }

  json summary = extra.is_object() ? extra : json::object();
  summary["log_lr"] = number_or_null(report.log_lr);
  summary["spectrum_ssb"] = spectrum_json(report.spectrum_ssb);
  summary["spectrum_re"] = spectrum_json(report.spectrum_re);
  summary["re_components_to_ssb_first"] = report.re_components_to_ssb_first;
  json zero = json::object();
  for (const auto& cs : report.cross_sections) {
    double ssb0 = 0.0, re0 = 0.0;
    for (const auto& r : cs.ssb) ssb0 += r.count == 0 ? r.fraction : 0.0;
    for (const auto& r : cs.re) re0 += r.count == 0 ? r.fraction : 0.0;
    zero[std::to_string(cs.hour)] = {{"ssb", ssb0}, {"re", re0}};
  }
  summary["zero_fraction"] = zero;
  json bic = json::array();
  for (const auto& r : report.bic) {
    bic.push_back({{"model", std::string(to_string(r.model))},
                   {"loglik", r.loglik},
                   {"n_params", r.n_params},
                   {"delta_bic", r.delta}});
  }
  summary["bic"] = bic;
  json fits = json::array();
  for (const auto& f : report.fits) fits.push_back(fit_to_json(f));
  summary["fits"] = fits;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace ssb
