#include "debias/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "debias/errors.hpp"

namespace debias {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

}  // namespace

Signal read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (next_token(in) != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  int cols = 0, rows = 0, maxval = 0;
  try {
    cols = std::stoi(next_token(in));
    rows = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  if (cols < 1 || rows < 1 || maxval < 1 || maxval > 255) {
    throw IoError(path.string() + ": unsupported PGM dimensions or depth");
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  Vector v(static_cast<Index>(bytes.size()));
  for (std::size_t i = 0; i < bytes.size(); ++i) v[static_cast<Index>(i)] = bytes[i];
  return Signal::grid(std::move(v), rows, cols);
}

void write_pgm(const std::filesystem::path& path, const Signal& image) {
  if (!image.shape().two_dimensional) throw InvalidDimension("PGM output needs a 2D signal");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.shape().cols << ' ' << image.shape().rows << "\n255\n";
  for (Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(std::round(image.values()[i]), 0.0, 255.0);
    out.put(static_cast<char>(static_cast<unsigned char>(v)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_signal_csv(const std::filesystem::path& path, const Signal& signal) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "index,value\n";
  for (Index i = 0; i < signal.size(); ++i) out << i << ',' << format_real(signal.values()[i]) << '\n';
}

void write_pd_trace_csv(std::ostream& os, const std::vector<PdTraceRow>& rows) {
  os << "iteration,energy,active_set,change,tilde_change\n";
  for (const auto& r : rows) {
    os << r.iteration << ',' << format_real(r.energy) << ',' << r.active_set << ','
       << format_real(r.change) << ',' << format_real(r.tilde_change) << '\n';
  }
}

}  // namespace debias
