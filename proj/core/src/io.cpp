#include "dpsurv/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace dpsurv::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& token, const std::string& where) {
  const std::string t = trim(token);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0')
    throw Error(errc::parse_error, "cannot parse number '" + token + "' in " + where);
  return v;
}

struct ColumnMap {
  int time = -1;
  int event = -1;
  int w = -1;
  int area = -1;
  int x_true = -1;
  std::vector<int> z;  // ordered z1..zJ
};

ColumnMap map_columns(const std::vector<std::string>& header) {
  ColumnMap cols;
  std::vector<std::pair<int, int>> z_cols;  // (z index, column)
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    const int ci = static_cast<int>(c);
    if (name == "time") {
      cols.time = ci;
    } else if (name == "event") {
      cols.event = ci;
    } else if (name == "w") {
      cols.w = ci;
    } else if (name == "area") {
      cols.area = ci;
    } else if (name == "x_true") {
      cols.x_true = ci;
    } else if (name.size() > 1 && name[0] == 'z') {
      int zi = 0;
      const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), zi);
      if (res.ec != std::errc() || res.ptr != name.data() + name.size() || zi < 1)
        throw Error(errc::parse_error, "unknown column '" + name + "'");
      z_cols.emplace_back(zi, ci);
    } else {
      throw Error(errc::parse_error, "unknown column '" + name + "'");
    }
  }
  if (cols.time < 0) throw Error(errc::parse_error, "missing required column 'time'");
  if (cols.event < 0) throw Error(errc::parse_error, "missing required column 'event'");
  if (cols.w < 0) throw Error(errc::parse_error, "missing required column 'w'");
  std::sort(z_cols.begin(), z_cols.end());
  for (std::size_t j = 0; j < z_cols.size(); ++j) {
    if (z_cols[j].first != static_cast<int>(j) + 1)
      throw Error(errc::parse_error, "z columns must be numbered z1..zJ without gaps");
    cols.z.push_back(z_cols[j].second);
  }
  return cols;
}

}  // namespace

SurvivalDataset parse_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(errc::parse_error, "empty dataset file");
  const ColumnMap cols = map_columns(split(trim(line), ','));

  std::vector<double> u, w, a, xt;
  std::vector<int> delta;
  std::vector<std::vector<double>> z(cols.z.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const auto tokens = split(row, ',');
    const std::string where = "line " + std::to_string(line_no);
    auto field = [&](int c) -> double {
      if (c < 0 || c >= static_cast<int>(tokens.size()))
        throw Error(errc::parse_error, "missing field in " + where);
      return parse_double(tokens[static_cast<std::size_t>(c)], where);
    };
    u.push_back(field(cols.time));
    delta.push_back(static_cast<int>(field(cols.event)));
    w.push_back(field(cols.w));
    if (cols.area >= 0) a.push_back(field(cols.area));
    if (cols.x_true >= 0) xt.push_back(field(cols.x_true));
    for (std::size_t j = 0; j < cols.z.size(); ++j) z[j].push_back(field(cols.z[j]));
  }

  SurvivalDataset data;
  const auto n = static_cast<Eigen::Index>(u.size());
  data.u = Eigen::Map<const Eigen::VectorXd>(u.data(), n);
  data.delta = Eigen::Map<const Eigen::VectorXi>(delta.data(), n);
  data.w = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
  if (!a.empty()) data.a = Eigen::Map<const Eigen::VectorXd>(a.data(), n);
  data.z.resize(n, static_cast<Eigen::Index>(z.size()));
  for (std::size_t j = 0; j < z.size(); ++j)
    data.z.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXd>(z[j].data(), n);
  if (!xt.empty()) data.x_true = Eigen::Map<const Eigen::VectorXd>(xt.data(), n);
  return validate_dataset(std::move(data));
}

SurvivalDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::parse_error, "cannot open '" + path + "'");
  return parse_dataset_csv(in);
}

std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const SurvivalDataset& data) {
  std::ostringstream out;
  out << "time,event,w,area";
  for (Eigen::Index j = 0; j < data.n_covariates(); ++j) out << ",z" << (j + 1);
  if (data.x_true) out << ",x_true";
  out << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.u[i]) << ',' << data.delta[i] << ','
        << format_double(data.w[i]) << ',' << format_double(data.a[i]);
    for (Eigen::Index j = 0; j < data.n_covariates(); ++j)
      out << ',' << format_double(data.z(i, j));
    if (data.x_true) out << ',' << format_double((*data.x_true)[i]);
    out << "\n";
  }
  return out.str();
}

void write_dataset_csv(const SurvivalDataset& data, const std::string& path) {
  write_file(path, dataset_to_csv(data));
}

SurvivalDataset parse_dataset_json(const std::string& text) {
  nlohmann::json records;
  try {
    records = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::parse_error, e.what());
  }
  if (!records.is_array()) throw Error(errc::parse_error, "expected a JSON record array");

  const auto n = static_cast<Eigen::Index>(records.size());
  SurvivalDataset data;
  data.u.resize(n);
  data.delta.resize(n);
  data.w.resize(n);

  Eigen::Index n_z = 0;
  bool has_area = false, has_x = false;
  if (n > 0) {
    const auto& first = records[0];
    if (first.contains("z")) {
      n_z = static_cast<Eigen::Index>(first["z"].size());
    } else {
      while (first.contains("z" + std::to_string(n_z + 1))) ++n_z;
    }
    has_area = first.contains("area");
    has_x = first.contains("x_true");
  }
  data.z.resize(n, n_z);
  if (has_area) data.a.resize(n);
  if (has_x) data.x_true = Eigen::VectorXd(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i)];
    try {
      data.u[i] = rec.at("time").get<double>();
      data.delta[i] = rec.at("event").get<int>();
      data.w[i] = rec.at("w").get<double>();
      if (has_area) data.a[i] = rec.at("area").get<double>();
      if (has_x) (*data.x_true)[i] = rec.at("x_true").get<double>();
      if (rec.contains("z")) {
        const auto& zs = rec.at("z");
        if (static_cast<Eigen::Index>(zs.size()) != n_z)
          throw Error(errc::parse_error, "ragged z arrays across records");
        for (Eigen::Index j = 0; j < n_z; ++j)
          data.z(i, j) = zs[static_cast<std::size_t>(j)].get<double>();
      } else {
        for (Eigen::Index j = 0; j < n_z; ++j)
          data.z(i, j) = rec.at("z" + std::to_string(j + 1)).get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::parse_error,
                  "record " + std::to_string(i) + ": " + e.what());
    }
  }
  return validate_dataset(std::move(data));
}

SurvivalDataset read_dataset_json(const std::string& path) {
  return parse_dataset_json(read_file(path));
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(errc::parse_error,
                  "expected key=value at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(errc::parse_error, "empty key at line " + std::to_string(line_no));
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::parse_error, "cannot open '" + path + "'");
  return parse_key_values(in);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::parse_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::parse_error, "cannot write '" + path + "'");
  out << content;
}

}  // namespace dpsurv::io
