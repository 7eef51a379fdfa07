#pragma once

// Generator-set files: {"n": int, "p": int, "matrices": [[[ [re, im], ... ]]],
// "labels": [str]?}. Parse errors carry the field path and line/column.
// Also the small text formats the command line accepts for complex numbers
// and vectors.

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypercyc/core_algebra.hpp"

namespace hypercyc {

using Json = nlohmann::ordered_json;

struct GeneratorSet {
  std::size_t n = 0;
  std::vector<ComplexMatrix> matrices;
  std::vector<std::string> labels;  // empty or one per matrix
};

namespace detail {

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Tracks the path of the value being parsed, so a syntax error can name the
// field it interrupted.
class PathTracker : public nlohmann::json_sax<nlohmann::json> {
 public:
  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override {
    frames_.push_back({false, 0, ""});
    return true;
  }
  bool key(string_t& k) override {
    frames_.back().key = k;
    return true;
  }
  bool end_object() override {
    frames_.pop_back();
    return value();
  }
  bool start_array(std::size_t) override {
    frames_.push_back({true, 0, ""});
    return true;
  }
  bool end_array() override {
    frames_.pop_back();
    return value();
  }
  bool parse_error(std::size_t byte, const std::string&, const nlohmann::detail::exception&) override {
    byte_ = byte;
    return false;
  }

  std::string path() const {
    std::string p;
    for (const auto& f : frames_) {
      if (f.array) {
        p += "[" + std::to_string(f.index) + "]";
      } else if (!f.key.empty()) {
        p += (p.empty() ? "" : ".") + f.key;
      }
    }
    return p.empty() ? "<root>" : p;
  }
  std::size_t byte() const { return byte_; }

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string key;
  };
  bool value() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    return true;
  }
  std::vector<Frame> frames_;
  std::size_t byte_ = 0;
};

inline std::size_t read_count(const Json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(field, std::string("missing field \"") + field + "\"");
  const Json& v = j.at(field);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw ParseError(field, std::string("field \"") + field + "\" must be a positive integer");
  return v.get<std::size_t>();
}

inline double read_number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw ParseError(field, "field " + field + " must be a number");
  return v.get<double>();
}

}  // namespace detail

inline GeneratorSet parse_generator_set(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::PathTracker tracker;
    nlohmann::json::sax_parse(text, &tracker);
    const std::size_t byte = tracker.byte() ? tracker.byte() : e.byte;
    throw ParseError(tracker.path(), "malformed JSON at " + detail::line_column(text, byte) + " in field " +
                                         tracker.path());
  }
  if (!j.is_object()) throw ParseError("<root>", "generator set must be a JSON object");
  GeneratorSet g;
  g.n = detail::read_count(j, "n");
  const std::size_t p = detail::read_count(j, "p");
  if (!j.contains("matrices") || !j["matrices"].is_array())
    throw ParseError("matrices", "missing array field \"matrices\"");
  const Json& ms = j["matrices"];
  if (ms.size() != p)
    throw ParseError("matrices", "p = " + std::to_string(p) + " but " + std::to_string(ms.size()) +
                                     " matrices are given");
  for (std::size_t m = 0; m < p; ++m) {
    const std::string field = "matrices[" + std::to_string(m) + "]";
    const Json& rows = ms[m];
    if (!rows.is_array() || rows.empty()) throw ParseError(field, "matrix " + std::to_string(m + 1) + " is not an array of rows");
    const std::size_t r = rows.size();
    std::size_t c = rows[0].is_array() ? rows[0].size() : 0;
    for (std::size_t i = 0; i < r; ++i)
      if (!rows[i].is_array() || rows[i].size() != c)
        throw ParseError(field + "[" + std::to_string(i) + "]",
                         "matrix " + std::to_string(m + 1) + " has rows of different lengths");
    if (r != c)
      throw ParseError(field, "matrix " + std::to_string(m + 1) + " is " + std::to_string(r) + "×" +
                                  std::to_string(c));
    if (r != g.n)
      throw ParseError(field, "matrix " + std::to_string(m + 1) + " is " + std::to_string(r) + "×" +
                                  std::to_string(c) + " but n = " + std::to_string(g.n));
    ComplexMatrix a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < c; ++k) {
        const std::string ef = field + "[" + std::to_string(i) + "][" + std::to_string(k) + "]";
        const Json& e = rows[i][k];
        if (!e.is_array() || e.size() != 2) throw ParseError(ef, "entry " + ef + " must be a [re, im] pair");
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            Complex(detail::read_number(e[0], ef + "[0]"), detail::read_number(e[1], ef + "[1]"));
      }
    g.matrices.push_back(std::move(a));
  }
  if (j.contains("labels")) {
    const Json& ls = j["labels"];
    if (!ls.is_array() || ls.size() != p) throw ParseError("labels", "labels must be an array of p strings");
    for (std::size_t m = 0; m < p; ++m) {
      if (!ls[m].is_string()) throw ParseError("labels[" + std::to_string(m) + "]", "labels must be strings");
      g.labels.push_back(ls[m].get<std::string>());
    }
  }
  return g;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("<file>", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline GeneratorSet read_generator_set(const std::string& path) { return parse_generator_set(read_text_file(path)); }

// One matrix row per line; numbers in shortest round-trip form.
inline std::string serialize_generator_set(const GeneratorSet& g) {
  auto num = [](double x) { return Json(x).dump(); };
  std::ostringstream os;
  os << "{\n  \"n\": " << g.n << ",\n  \"p\": " << g.matrices.size() << ",\n  \"matrices\": [\n";
  for (std::size_t m = 0; m < g.matrices.size(); ++m) {
    const ComplexMatrix& a = g.matrices[m];
    os << "    [\n";
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      os << "      [";
      for (Eigen::Index k = 0; k < a.cols(); ++k)
        os << (k ? ", " : "") << '[' << num(a(i, k).real()) << ", " << num(a(i, k).imag()) << ']';
      os << ']' << (i + 1 < a.rows() ? "," : "") << '\n';
    }
    os << "    ]" << (m + 1 < g.matrices.size() ? "," : "") << '\n';
  }
  os << "  ]";
  if (!g.labels.empty()) {
    os << ",\n  \"labels\": [";
    for (std::size_t m = 0; m < g.labels.size(); ++m) os << (m ? ", " : "") << Json(g.labels[m]).dump();
    os << ']';
  }
  os << "\n}\n";
  return os.str();
}

inline bool same_bits(const GeneratorSet& a, const GeneratorSet& b) {
  if (a.n != b.n || a.labels != b.labels || a.matrices.size() != b.matrices.size()) return false;
  for (std::size_t m = 0; m < a.matrices.size(); ++m) {
    const ComplexMatrix &x = a.matrices[m], &y = b.matrices[m];
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(), sizeof(Complex) * static_cast<std::size_t>(x.size())) != 0) return false;
  }
  return true;
}

// parse -> serialize -> parse gives bit-identical numbers and labels.
inline bool validate_roundtrip(const std::string& path) {
  const GeneratorSet g = read_generator_set(path);
  return same_bits(g, parse_generator_set(serialize_generator_set(g)));
}

// "2", "-0.5", "2+0i", "0.3-1.2i", "i", "-i", "1e-3+2e-1i".
inline Complex parse_complex(const std::string& s) {
  auto fail = [&]() -> Complex { throw ParseError("<complex>", "cannot parse complex number \"" + s + "\""); };
  if (s.empty()) return fail();
  std::string t;
  for (char c : s)
    if (c != ' ') t += c;
  if (t.back() != 'i') {
    std::size_t used = 0;
    double re = 0.0;
    try {
      re = std::stod(t, &used);
    } catch (const std::exception&) {
      return fail();
    }
    return used == t.size() ? Complex(re, 0.0) : fail();
  }
  t.pop_back();
  // Split at the last sign that is not part of an exponent.
  std::size_t split = std::string::npos;
  for (std::size_t i = t.size(); i-- > 1;)
    if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
      split = i;
      break;
    }
  const std::string re_s = split == std::string::npos ? "" : t.substr(0, split);
  std::string im_s = split == std::string::npos ? t : t.substr(split);
  if (im_s.empty() || im_s == "+") im_s = "1";
  if (im_s == "-") im_s = "-1";
  double re = 0.0, im = 0.0;
  try {
    std::size_t u1 = 0, u2 = 0;
    if (!re_s.empty()) {
      re = std::stod(re_s, &u1);
      if (u1 != re_s.size()) return fail();
    }
    im = std::stod(im_s, &u2);
    if (u2 != im_s.size()) return fail();
  } catch (const std::exception&) {
    return fail();
  }
  return {re, im};
}

// "e3" (1-based basis vector), "ones", or a comma-separated complex list.
inline ComplexVector parse_vector(const std::string& s, std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  if (s == "ones") return ComplexVector::Ones(N);
  if (s.size() > 1 && s[0] == 'e' && s.find_first_not_of("0123456789", 1) == std::string::npos) {
    const std::size_t k = std::stoul(s.substr(1));
    if (k < 1 || k > n) throw ParseError("<vector>", "basis index out of range in \"" + s + "\"");
    return ComplexVector::Unit(N, static_cast<Eigen::Index>(k - 1));
  }
  std::vector<Complex> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(parse_complex(item));
  if (parts.size() != n)
    throw ParseError("<vector>", "vector \"" + s + "\" has " + std::to_string(parts.size()) + " entries, expected " +
                                     std::to_string(n));
  ComplexVector v(N);
  for (std::size_t l = 0; l < n; ++l) v(static_cast<Eigen::Index>(l)) = parts[l];
  return v;
}

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ComplexVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
  return a;
}

inline Json to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hypercyc
