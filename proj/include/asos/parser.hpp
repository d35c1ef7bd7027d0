#ifndef ASOS_PARSER_HPP
#define ASOS_PARSER_HPP

#include <map>
#include <stdexcept>
#include <string>

#include "asos/model.hpp"

#include "json.hpp"

namespace asos {

class ParseError : public std::runtime_error {
  public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Parses a model document. Control-flow sugar — an edge endpoint naming a
// node instead of a pin — is expanded here: forks and decisions receive one
// synthetic control out-pin per edge, joins and merges one synthetic
// control in-pin per edge, every other kind a shared ctl_in/ctl_out pin.
// Call nodes must not declare pins; their interface pins are derived from
// the callee's parameter nodes.
Model parse_model(const std::string& json_text);

Model load_model_file(const std::string& path);

// Execution-time table: {"NodeId": <units>, ...}, units >= 0.
std::map<std::string, int> parse_timing_table(const std::string& json_text);
std::map<std::string, int> load_timing_file(const std::string& path);

// Token literals in documents: numbers are Int, booleans Bool, strings
// Str, null Null, {"token":"control"} a control token and
// {"event":name,"args":[...]} an event value.
nlohmann::json token_to_json(const TokenValue& v);
TokenValue token_from_json(const nlohmann::json& j);

}  // namespace asos

#endif
