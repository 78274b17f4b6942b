#include "selectest/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "selectest/errors.hpp"

namespace selectest {

void ColumnRoles::validate() const {
  if (outcome.empty()) throw ConfigError("columns", "an outcome column is required");
  if (selection.empty()) throw ConfigError("columns", "a selection column is required");
  if (x.empty()) throw ConfigError("columns", "at least one x column is required");
  if (zc.empty() && zd.empty()) throw ConfigError("columns", "at least one instrument column is required");
  std::set<std::string> seen{outcome};
  auto claim = [&](const std::string& name, const char* role) {
    if (!seen.insert(name).second) {
      throw ConfigError("columns", "column '" + name + "' assigned twice (" + role + ")");
    }
  };
  claim(selection, "selection");
  for (const auto& c : x) claim(c, "x");
  // zc may repeat x columns
  std::set<std::string> zc_seen;
  for (const auto& c : zc) {
    if (!zc_seen.insert(c).second) throw ConfigError("columns", "column '" + c + "' listed twice in zc");
    if (std::find(x.begin(), x.end(), c) == x.end()) claim(c, "zc");
  }
  for (const auto& c : zd) claim(c, "zd");
  if (oracle_p) claim(*oracle_p, "oracle-p");
  const bool excluded =
      !zd.empty() || std::any_of(zc.begin(), zc.end(), [&](const std::string& c) {
        return std::find(x.begin(), x.end(), c) == x.end();
      });
  if (!excluded) throw ConfigError("columns", "at least one instrument must be excluded from x");
}

std::vector<std::vector<std::string>> read_csv_records(std::istream& in, std::string_view source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool quoted_field = false;
  std::size_t line = 1;
  std::size_t quote_line = 0;
  char ch;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    quoted_field = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started || quoted_field) {
          throw DataError("csv", std::string(source) + ": line " + std::to_string(line) +
                                     ": stray quote inside an unquoted field");
        }
        in_quotes = true;
        quoted_field = true;
        quote_line = line;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (quoted_field) {
          throw DataError("csv", std::string(source) + ": line " + std::to_string(line) +
                                     ": characters after a closing quote");
        }
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw DataError("csv", std::string(source) + ": unterminated quoted field starting on line " +
                               std::to_string(quote_line));
  }
  if (field_started || quoted_field || !record.empty()) end_record();
  return records;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

}  // namespace

std::optional<double> parse_number(std::string_view field) {
  std::string_view s = trim(field);
  if (is_missing(s)) return std::numeric_limits<double>::quiet_NaN();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

LoadedData parse_csv(std::istream& in, const ColumnRoles& roles, std::string_view source) {
  roles.validate();
  const auto records = read_csv_records(in, source);
  if (records.empty()) throw DataError("csv", std::string(source) + ": missing header row");
  const auto& header = records.front();
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) index[std::string(trim(header[c]))] = c;
  auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw DataError("csv", std::string(source) + ": missing column '" + name + "'");
    }
    return it->second;
  };
  const std::size_t c_y = column(roles.outcome);
  const std::size_t c_s = column(roles.selection);
  std::vector<std::size_t> c_x, c_zc, c_zd;
  for (const auto& name : roles.x) c_x.push_back(column(name));
  for (const auto& name : roles.zc) c_zc.push_back(column(name));
  for (const auto& name : roles.zd) c_zd.push_back(column(name));
  const bool has_p = roles.oracle_p.has_value();
  const std::size_t c_p = has_p ? column(*roles.oracle_p) : 0;

  const std::size_t n = records.size() - 1;
  LoadedData out;
  Dataset& d = out.data;
  d.y.assign(n, std::numeric_limits<double>::quiet_NaN());
  d.s.assign(n, 0);
  d.x = Matrix(n, c_x.size());
  d.zc = Matrix(n, c_zc.size());
  d.zd = CategoryMatrix(n, c_zd.size());
  d.x_names = roles.x;
  d.zc_names = roles.zc;
  d.zd_names = roles.zd;
  if (has_p) out.oracle_p.resize(n);
  std::vector<std::map<std::string, int>> codes(c_zd.size());

  auto where = [&](std::size_t row, std::size_t col) {
    return std::string(source) + ": row " + std::to_string(row + 1) + " (line " +
           std::to_string(row + 2) + "), column '" + std::string(trim(header[col])) + "'";
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = records[i + 1];
    if (rec.size() != header.size()) {
      throw DataError("csv", std::string(source) + ": row " + std::to_string(i + 1) + " has " +
                                 std::to_string(rec.size()) + " fields, header has " +
                                 std::to_string(header.size()));
    }
    auto number = [&](std::size_t col, bool allow_missing) {
      const auto v = parse_number(rec[col]);
      if (!v) throw DataError("csv", where(i, col) + ": not a number: '" + rec[col] + "'");
      if (!allow_missing && !std::isfinite(*v)) {
        throw DataError("csv", where(i, col) + ": missing or non-finite value");
      }
      return *v;
    };
    const auto sv = parse_number(rec[c_s]);
    if (!sv || !(*sv == 0.0 || *sv == 1.0)) {
      throw DataError("csv", where(i, c_s) + ": selection must be 0 or 1, got '" + rec[c_s] + "'");
    }
    d.s[i] = *sv == 1.0 ? 1 : 0;
    if (d.s[i]) {
      d.y[i] = number(c_y, false);
    } else if (!is_missing(rec[c_y])) {
      number(c_y, true);  // still validated, then dropped
    }
    for (std::size_t j = 0; j < c_x.size(); ++j) d.x(i, j) = number(c_x[j], false);
    for (std::size_t j = 0; j < c_zc.size(); ++j) d.zc(i, j) = number(c_zc[j], false);
    for (std::size_t j = 0; j < c_zd.size(); ++j) {
      const std::string_view raw = trim(rec[c_zd[j]]);
      if (is_missing(raw)) throw DataError("csv", where(i, c_zd[j]) + ": missing category");
      auto& m = codes[j];
      const auto it = m.emplace(std::string(raw), static_cast<int>(m.size())).first;
      d.zd(i, j) = it->second;
    }
    if (has_p) {
      const double p = number(c_p, false);
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("csv", where(i, c_p) + ": propensity outside [0,1]");
      out.oracle_p[i] = p;
    }
  }
  d.validate();
  return out;
}

LoadedData load_csv(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("csv", "cannot open '" + path + "'");
  return parse_csv(in, roles, path);
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "text") return ReportFormat::Text;
  throw ConfigError("format", "unknown format '" + std::string(name) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json report_to_json(const TestReport& r) {
  nlohmann::json j;
  j["test"] = r.test;
  j["statistic"] = r.statistic;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& t : r.per_tau) per.push_back({{"tau", t.tau}, {"value", t.value}});
  j["per_tau"] = per;
  j["argmax"] = r.argmax ? cell_to_json(*r.argmax) : nlohmann::json(nullptr);
  j["argmax_tau"] = r.argmax_tau ? nlohmann::json(*r.argmax_tau) : nlohmann::json(nullptr);
  nlohmann::json cvs = nlohmann::json::object();
  for (const auto& [a, v] : r.critical_values) cvs[format_double(a)] = v;
  j["critical_values"] = cvs;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  j["n_selected"] = r.n_selected;
  j["n_window"] = r.n_window ? nlohmann::json(*r.n_window) : nlohmann::json(nullptr);
  j["eta_used"] = r.eta_used ? nlohmann::json(*r.eta_used) : nlohmann::json(nullptr);
  j["boot_draws"] = r.boot_draws;
  j["diagnostics"] = r.diagnostics;
  j["config_echo"] = r.config_echo;
  j["seed"] = r.seed;
  return j;
}

TestReport report_from_json(const nlohmann::json& j) {
  try {
    TestReport r;
    r.test = j.at("test").get<std::string>();
    r.statistic = j.at("statistic").get<double>();
    for (const auto& t : j.at("per_tau")) {
      r.per_tau.push_back({t.at("tau").get<double>(), t.at("value").get<double>()});
    }
    if (!j.at("argmax").is_null()) r.argmax = cell_from_json(j.at("argmax"));
    if (!j.at("argmax_tau").is_null()) r.argmax_tau = j.at("argmax_tau").get<double>();
    for (const auto& [key, v] : j.at("critical_values").items()) {
      double a = 0.0;
      const auto res = std::from_chars(key.data(), key.data() + key.size(), a);
      if (res.ec != std::errc()) throw DataError("report", "bad alpha key '" + key + "'");
      r.critical_values[a] = v.get<double>();
    }
    r.p_value = j.at("p_value").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.n_selected = j.at("n_selected").get<std::size_t>();
    if (!j.at("n_window").is_null()) r.n_window = j.at("n_window").get<std::size_t>();
    if (!j.at("eta_used").is_null()) r.eta_used = j.at("eta_used").get<double>();
    r.boot_draws = j.at("boot_draws").get<std::vector<double>>();
    r.diagnostics = j.at("diagnostics");
    r.config_echo = j.at("config_echo");
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("report", std::string("malformed report JSON: ") + e.what());
  }
}

std::string boot_draws_csv(const TestReport& r) {
  std::string out = "replication,draw\n";
  for (std::size_t k = 0; k < r.boot_draws.size(); ++k) {
    out += std::to_string(k + 1) + "," + format_double(r.boot_draws[k]) + "\n";
  }
  return out;
}

namespace {

std::string percent_label(double v) {
  char buf[32];
  const double pct = 100.0 * v;
  if (std::abs(pct - std::round(pct)) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%.0f%%", pct);
  } else {
    std::snprintf(buf, sizeof buf, "%g%%", pct);
  }
  return buf;
}

void text_row(std::ostringstream& os, const std::string& label, const std::string& value) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %s\n", label.c_str(), value.c_str());
  os << buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_report_text(const TestReport& r) {
  std::ostringstream os;
  os << r.test << " (" << r.boot_draws.size() << " bootstrap replications, seed " << r.seed
     << ")\n";
  text_row(os, "Statistic", fixed(r.statistic, 4));
  for (const auto& t : r.per_tau) text_row(os, percent_label(t.tau), fixed(t.value, 4));
  for (auto it = r.critical_values.rbegin(); it != r.critical_values.rend(); ++it) {
    text_row(os, percent_label(1.0 - it->first) + "-CV", fixed(it->second, 4));
  }
  text_row(os, "P-Value", fixed(r.p_value, 3));
  text_row(os, "# obs", std::to_string(r.n));
  text_row(os, "# selected", std::to_string(r.n_selected));
  if (r.n_window) text_row(os, "# window", std::to_string(*r.n_window));
  if (r.eta_used) text_row(os, "eta", fixed(*r.eta_used, 2));
  return os.str();
}

std::string render_report(const TestReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return report_to_json(r).dump(2) + "\n";
    case ReportFormat::Csv: return boot_draws_csv(r);
    case ReportFormat::Text: return format_report_text(r);
  }
  return {};
}

std::string plot_profile_svg(const TestReport& r) {
  const double W = 480, H = 300, left = 50, right = 20, top = 20, bottom = 40;
  std::vector<std::pair<double, double>> pts;
  std::string xlabel;
  if (!r.per_tau.empty()) {
    for (const auto& t : r.per_tau) pts.emplace_back(t.tau, t.value);
    xlabel = "tau";
  } else {
    pts.emplace_back(0.0, r.statistic);
    pts.emplace_back(1.0, r.statistic);
    xlabel = "statistic";
  }
  double ymin = 0.0, ymax = 0.0;
  for (const auto& p : pts) {
    ymin = std::min(ymin, p.second);
    ymax = std::max(ymax, p.second);
  }
  for (const auto& [a, v] : r.critical_values) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  if (ymax <= ymin) ymax = ymin + 1.0;
  double xmin = pts.front().first, xmax = pts.back().first;
  if (xmax <= xmin) xmax = xmin + 1.0;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * (H - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
     << H - bottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << H - bottom << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n";
  os << "<text x=\"" << left - 4 << "\" y=\"" << sy(ymax) + 4 << "\" text-anchor=\"end\">"
     << fixed(ymax, 3) << "</text>\n";
  os << "<text x=\"" << left - 4 << "\" y=\"" << sy(ymin) + 4 << "\" text-anchor=\"end\">"
     << fixed(ymin, 3) << "</text>\n";
  for (const auto& [a, v] : r.critical_values) {
    os << "<line x1=\"" << left << "\" y1=\"" << sy(v) << "\" x2=\"" << W - right << "\" y2=\""
       << sy(v) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << W - right << "\" y=\"" << sy(v) - 3 << "\" text-anchor=\"end\">"
       << percent_label(1.0 - a) << "-CV</text>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : pts) os << sx(p.first) << "," << sy(p.second) << " ";
  os << "\"/>\n";
  for (const auto& p : pts) {
    os << "<circle cx=\"" << sx(p.first) << "\" cy=\"" << sy(p.second)
       << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("output", "cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("output", "write to '" + path + "' failed");
}

void emit_report(const TestReport& report, ReportFormat format, const std::string& path) {
  write_output(path, render_report(report, format));
}

}  // namespace selectest
