#include "textattr/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "textattr/errors.hpp"
#include "textattr/textio.hpp"

namespace textattr {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& content,
                                                const std::string& origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.push_back(row);
    row.clear();
  };
  while (i < content.size()) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r') {
      ++i;
    } else if (c == '\n') {
      end_row();
      ++i;
    } else {
      field += c;
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw SchemaError("unterminated quote in " + origin);
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

std::string attribution_to_json_line(const Attribution& attr) {
  nlohmann::json j;
  j["doc_id"] = attr.doc_id;
  j["method"] = attr.method;
  j["granularity"] = granularity_name(attr.granularity);
  j["seed"] = attr.seed;
  j["budget_or_steps"] = attr.budget_or_steps;
  j["target_class"] = attr.target_class;
  j["phi0"] = attr.phi0;
  j["values"] = attr.values;
  return j.dump();
}

Attribution attribution_from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("attribution line: ") + e.what());
  }
  Attribution attr;
  try {
    attr.doc_id = j.at("doc_id").get<std::string>();
    attr.method = j.at("method").get<std::string>();
    attr.granularity =
        granularity_from_name(j.at("granularity").get<std::string>());
    attr.seed = j.at("seed").get<std::uint64_t>();
    attr.budget_or_steps = j.at("budget_or_steps").get<std::size_t>();
    attr.target_class = j.at("target_class").get<int>();
    attr.phi0 = j.at("phi0").get<double>();
    attr.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("attribution line: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("attribution line: ") + e.what());
  }
  return attr;
}

void write_attributions_jsonl(const std::string& path,
                              const std::vector<Attribution>& attrs) {
  std::string out;
  for (const auto& a : attrs) {
    out += attribution_to_json_line(a);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<Attribution> read_attributions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Attribution> attrs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    attrs.push_back(attribution_from_json_line(line));
  }
  return attrs;
}

std::string robustness_summary_json(const RobustnessReport& report) {
  nlohmann::json j;
  if (std::isnan(report.median_diff)) {
    j["median_diff"] = nullptr;
  } else {
    j["median_diff"] = report.median_diff;
  }
  j["compared"] = report.rows.size();
  j["excluded"] = report.excluded;
  j["histogram_token"] = report.histogram_token;
  j["histogram_sentence"] = report.histogram_sentence;
  return j.dump(2) + "\n";
}

}  // namespace textattr
