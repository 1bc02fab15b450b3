#include "bmrf/io.hpp"

#include <unistd.h>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bmrf/error.hpp"

namespace bmrf {

using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename onto '" + path + "': " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// Images

namespace {

BinaryImage parse_text_grid(const std::string& content, Boundary boundary) {
  std::istringstream in(content);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    std::string row;
    for (char c : line) {
      if (c == '#') break;
      if (c == '0' || c == '1')
        row.push_back(c);
      else if (!std::isspace(static_cast<unsigned char>(c)))
        throw ValidationError(std::string("unexpected character '") + c + "' in image grid");
    }
    if (!row.empty()) rows.push_back(row);
  }
  if (rows.empty()) throw ValidationError("image grid is empty");
  BinaryImage x(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()), boundary);
  for (int i = 0; i < x.n; ++i) {
    if (static_cast<int>(rows[i].size()) != x.m) throw ValidationError("image grid rows have different lengths");
    for (int j = 0; j < x.m; ++j) x.at(i, j) = rows[i][j] == '1';
  }
  return x;
}

// Next whitespace-delimited header token of a PBM file, skipping comments.
std::string pbm_token(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (start == pos) throw ValidationError("truncated PBM header");
  return s.substr(start, pos - start);
}

BinaryImage parse_pbm(const std::string& s, Boundary boundary) {
  std::size_t pos = 0;
  const std::string magic = pbm_token(s, pos);
  int w = 0;
  int h = 0;
  try {
    w = std::stoi(pbm_token(s, pos));
    h = std::stoi(pbm_token(s, pos));
  } catch (const std::logic_error&) {
    throw ValidationError("bad PBM dimensions");
  }
  if (w < 1 || h < 1) throw ValidationError("bad PBM dimensions");
  BinaryImage x(h, w, boundary);
  if (magic == "P1") {
    int k = 0;
    for (; pos < s.size() && k < w * h; ++pos) {
      const char c = s[pos];
      if (c == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else if (c == '0' || c == '1') {
        x.data[k++] = c == '1';
      }
    }
    if (k != w * h) throw ValidationError("PBM body is truncated");
  } else {
    ++pos;  // single whitespace after the header
    const std::size_t stride = (static_cast<std::size_t>(w) + 7) / 8;
    if (s.size() < pos + stride * h) throw ValidationError("PBM body is truncated");
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const auto byte = static_cast<unsigned char>(s[pos + i * stride + j / 8]);
        x.at(i, j) = (byte >> (7 - j % 8)) & 1u;
      }
  }
  return x;
}

}  // namespace

BinaryImage parse_image(const std::string& content, Boundary boundary) {
  if (content.rfind("P1", 0) == 0 || content.rfind("P4", 0) == 0) return parse_pbm(content, boundary);
  return parse_text_grid(content, boundary);
}

BinaryImage read_image(const std::string& path, Boundary boundary) { return parse_image(read_text(path), boundary); }

std::string format_image_text(const BinaryImage& x) {
  std::string out;
  out.reserve(static_cast<std::size_t>(x.n) * (x.m + 1));
  for (int i = 0; i < x.n; ++i) {
    for (int j = 0; j < x.m; ++j) out.push_back(x.at(i, j) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

std::string format_image_pbm(const BinaryImage& x, bool binary) {
  std::string out = std::string(binary ? "P4" : "P1") + "\n" + std::to_string(x.m) + " " + std::to_string(x.n) + "\n";
  if (!binary) return out + format_image_text(x);
  const std::size_t stride = (static_cast<std::size_t>(x.m) + 7) / 8;
  std::string body(stride * x.n, '\0');
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.m; ++j)
      if (x.at(i, j)) body[i * stride + j / 8] = static_cast<char>(body[i * stride + j / 8] | (0x80 >> (j % 8)));
  return out + body;
}

void write_image(const std::string& path, const BinaryImage& x) {
  const bool pbm = std::filesystem::path(path).extension() == ".pbm";
  atomic_write(path, pbm ? format_image_pbm(x, true) : format_image_text(x));
}

// ---------------------------------------------------------------------------
// Covariates

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

double to_number(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("covariate CSV line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
}

}  // namespace

CovariateTable parse_covariates_csv(const std::string& content, int n, int m) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("covariate CSV is empty");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "i" || header[1] != "j")
    throw ValidationError("covariate CSV header must start with i,j");
  CovariateTable t;
  std::size_t mask_col = header.size();
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] == "mask")
      mask_col = c;
    else
      t.names.push_back(header[c]);
  }
  const int K = static_cast<int>(t.names.size());
  t.field.n = n;
  t.field.m = m;
  t.field.K = K;
  t.field.y.assign(static_cast<std::size_t>(n) * m * K, 0.0);
  const bool has_mask = mask_col < header.size();
  if (has_mask) t.active.assign(static_cast<std::size_t>(n) * m, 0);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ValidationError("covariate CSV line " + std::to_string(lineno) + " has the wrong number of columns");
    const int i = static_cast<int>(to_number(cells[0], lineno));
    const int j = static_cast<int>(to_number(cells[1], lineno));
    if (i < 0 || i >= n || j < 0 || j >= m)
      throw ValidationError("covariate CSV line " + std::to_string(lineno) + ": node outside the lattice");
    const std::size_t site = static_cast<std::size_t>(i) * m + j;
    int k = 0;
    for (std::size_t c = 2; c < cells.size(); ++c) {
      if (c == mask_col) {
        t.active[site] = to_number(cells[c], lineno) != 0.0;
        continue;
      }
      t.field.y[site * K + k++] = to_number(cells[c], lineno);
    }
  }
  return t;
}

CovariateTable read_covariates(const std::string& path, int n, int m) {
  return parse_covariates_csv(read_text(path), n, m);
}

std::string format_covariates_csv(const CovariateTable& t) {
  std::ostringstream out;
  out.precision(17);
  out << "i,j";
  for (const auto& nm : t.names) out << ',' << nm;
  if (!t.active.empty()) out << ",mask";
  out << '\n';
  for (int i = 0; i < t.field.n; ++i)
    for (int j = 0; j < t.field.m; ++j) {
      const int site = i * t.field.m + j;
      out << i << ',' << j;
      for (int k = 0; k < t.field.K; ++k) out << ',' << t.field.at(site, k);
      if (!t.active.empty()) out << ',' << int(t.active[site]);
      out << '\n';
    }
  return out.str();
}

// ---------------------------------------------------------------------------
// States

std::string state_to_json(const PartitionState& z) {
  json j;
  j["groups"] = z.groups();
  j["values"] = z.values();
  j["theta"] = z.theta();
  return j.dump();
}

PartitionState state_from_json(const std::string& text, int class_count) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("state is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("groups") || !j.contains("values"))
    throw ValidationError("state document needs 'groups' and 'values'");
  try {
    auto groups = j.at("groups").get<std::vector<std::vector<int>>>();
    auto values = j.at("values").get<std::vector<double>>();
    std::vector<double> theta;
    if (j.contains("theta")) theta = j.at("theta").get<std::vector<double>>();
    return PartitionState(class_count, std::move(groups), std::move(values), std::move(theta));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed state document: ") + e.what());
  }
}

PartitionState read_state(const std::string& path, int class_count) {
  return state_from_json(read_text(path), class_count);
}

std::vector<PartitionState> read_states_jsonl(const std::string& path, int class_count) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<PartitionState> out;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(state_from_json(line, class_count));
  return out;
}

// ---------------------------------------------------------------------------
// Class vectors

std::vector<double> parse_class_vector(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::vector<std::pair<int, double>> entries;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    int id = 0;
    double v = 0.0;
    if (!(ls >> id)) continue;
    if (!(ls >> v)) throw ValidationError("line " + std::to_string(lineno) + ": expected '<class-id> <value>'");
    entries.emplace_back(id, v);
  }
  if (entries.empty()) throw ValidationError("vector file has no entries");
  std::vector<double> out(entries.size());
  std::vector<char> seen(entries.size(), 0);
  for (auto [id, v] : entries) {
    if (id < 0 || id >= static_cast<int>(entries.size()) || seen[id])
      throw ValidationError("class ids must be 0..K-1, each exactly once");
    seen[id] = 1;
    out[id] = v;
  }
  return out;
}

std::string format_class_vector(const std::vector<double>& values, const std::string& header) {
  std::string out = "# " + header + "\n";
  char buf[64];
  for (std::size_t c = 0; c < values.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", c, values[c]);
    out += buf;
  }
  return out;
}

}  // namespace bmrf
