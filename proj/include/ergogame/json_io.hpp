#ifndef ERGOGAME_JSON_IO_HPP_
#define ERGOGAME_JSON_IO_HPP_

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ergogame {

// Insertion-ordered, so emitted files have a fixed key order.
using Json = nlohmann::ordered_json;

// Parse error or schema violation. The message carries the source name and
// either line:column or the key path.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two-space indented text with a trailing newline. Reals are written with
// "%#.17g" so they round-trip exactly and always carry a decimal point;
// NaN and infinities throw FormatError. Arrays of scalars stay on one line.
std::string to_json_text(const Json& value);

Json parse_json_text(const std::string& text, const std::string& source);
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Typed accessors that name `where` and the key on failure.
const Json& require_key(const Json& object, const std::string& key,
                        const std::string& where);
double require_number(const Json& value, const std::string& where);
std::size_t require_index(const Json& value, const std::string& where);

}  // namespace ergogame

#endif  // ERGOGAME_JSON_IO_HPP_
