#include "pyramidai/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "pyramidai/errors.hpp"

namespace pyramidai::io {

namespace {

// Reads the next PGM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_int(const std::string& s, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError(std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

void write_pgm(std::ostream& out, const Mask& mask) {
  out << "P5\n" << mask.cols() << ' ' << mask.rows() << "\n255\n";
  for (std::uint8_t v : mask.data()) out.put(static_cast<char>(v ? 255 : 0));
  if (!out) throw DataError("PGM write failed");
}

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
  auto out = open_output(path, true);
  write_pgm(out, mask);
}

Mask read_pgm(std::istream& in) {
  if (next_token(in) != "P5") throw DataError("not a binary PGM (P5)");
  const int cols = parse_int(next_token(in), "PGM width");
  const int rows = parse_int(next_token(in), "PGM height");
  const int maxval = parse_int(next_token(in), "PGM maxval");
  if (cols < 1 || rows < 1) throw DataError("PGM dimensions must be positive");
  if (maxval < 1 || maxval > 255) throw DataError("PGM maxval must be in [1,255]");
  Mask mask(cols, rows);
  for (auto& v : mask.data()) {
    const int ch = in.get();
    if (ch == EOF) throw DataError("truncated PGM raster");
    v = ch != 0 ? 1 : 0;
  }
  return mask;
}

Mask read_pgm(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  try {
    return read_pgm(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_prediction_csv(std::ostream& out, const PredictionTable& table) {
  out << "level,col,row,probability,label\n";
  for (const auto& [t, v] : table.entries()) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v.probability);
    out << t.level << ',' << t.col << ',' << t.row << ',' << std::string_view(buf, end - buf)
        << ',' << (v.label ? 1 : 0) << '\n';
  }
  if (!out) throw DataError("CSV write failed");
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionTable& table) {
  auto out = open_output(path);
  write_prediction_csv(out, table);
}

PredictionTable read_prediction_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty prediction CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "level,col,row,probability,label") {
    throw DataError("unexpected prediction CSV header '" + line + "'");
  }
  PredictionTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string fields[5];
    std::istringstream ss(line);
    int n = 0;
    while (n < 5 && std::getline(ss, fields[n], ',')) ++n;
    std::string extra;
    if (n != 5 || std::getline(ss, extra)) {
      throw DataError("prediction CSV line " + std::to_string(lineno) + ": expected 5 fields");
    }
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), p);
    if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size()) {
      throw DataError("prediction CSV line " + std::to_string(lineno) + ": bad probability");
    }
    const int label = parse_int(fields[4], "label");
    if (label != 0 && label != 1) {
      throw DataError("prediction CSV line " + std::to_string(lineno) + ": label must be 0 or 1");
    }
    table.insert({parse_int(fields[0], "level"), parse_int(fields[1], "col"),
                  parse_int(fields[2], "row")},
                 p, label == 1);
  }
  return table;
}

PredictionTable read_prediction_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_prediction_csv(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace pyramidai::io
