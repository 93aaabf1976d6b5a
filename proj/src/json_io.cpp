#include "ergogame/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ergogame {
namespace {

bool is_scalar(const Json& v) { return !v.is_object() && !v.is_array(); }

void emit(const Json& v, int depth, std::string& out) {
  const std::string pad(2 * depth, ' ');
  const std::string inner(2 * depth + 2, ' ');
  switch (v.type()) {
    case Json::value_t::null:
      out += "null";
      return;
    case Json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      return;
    case Json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      return;
    case Json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      return;
    case Json::value_t::number_float: {
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw FormatError("cannot write non-finite real");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%#.17g", x);
      out += buf;
      // A 17-digit integer part leaves a bare trailing point, which JSON
      // does not accept.
      if (out.back() == '.') out += '0';
      return;
    }
    case Json::value_t::string:
      out += v.dump();
      return;
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      bool flat = true;
      for (const auto& e : v) flat = flat && is_scalar(e);
      if (flat) {
        out += '[';
        for (std::size_t k = 0; k < v.size(); ++k) {
          if (k) out += ", ";
          emit(v[k], depth + 1, out);
        }
        out += ']';
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < v.size(); ++k) {
        out += inner;
        emit(v[k], depth + 1, out);
        out += k + 1 < v.size() ? ",\n" : "\n";
      }
      out += pad + ']';
      return;
    }
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t k = 0;
      for (auto it = v.begin(); it != v.end(); ++it, ++k) {
        out += inner + Json(it.key()).dump() + ": ";
        emit(it.value(), depth + 1, out);
        out += k + 1 < v.size() ? ",\n" : "\n";
      }
      out += pad + '}';
      return;
    }
    default:
      throw FormatError("unsupported JSON value");
  }
}

}  // namespace

std::string to_json_text(const Json& value) {
  std::string out;
  emit(value, 0, out);
  out += '\n';
  return out;
}

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    // e.byte is the 1-based position of the offending character.
    const std::size_t stop =
        std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": JSON parse error: "
       << e.what();
    throw FormatError(os.str());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

const Json& require_key(const Json& object, const std::string& key,
                        const std::string& where) {
  if (!object.is_object()) throw FormatError(where + ": expected an object");
  const auto it = object.find(key);
  if (it == object.end()) {
    throw FormatError(where + ": missing key \"" + key + "\"");
  }
  return *it;
}

double require_number(const Json& value, const std::string& where) {
  if (!value.is_number()) throw FormatError(where + ": expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw FormatError(where + ": non-finite number");
  return x;
}

std::size_t require_index(const Json& value, const std::string& where) {
  if (value.is_number_unsigned()) return value.get<std::size_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
    return static_cast<std::size_t>(value.get<std::int64_t>());
  }
  throw FormatError(where + ": expected a nonnegative integer");
}

}  // namespace ergogame
