#ifndef GREDP_CONFIG_HPP
#define GREDP_CONFIG_HPP

#include <map>
#include <string>

namespace gredp {

// Flat key=value configuration: one pair per line, '#' comments, blank
// lines ignored. Values keep internal whitespace; keys and values are
// trimmed at the edges.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text);
ConfigMap load_config_file(const std::string& path);

}  // namespace gredp

#endif  // GREDP_CONFIG_HPP
