// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "run_config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace utg::cli {

namespace {

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ',';
      out += scalar_text(e);
    }
    return out;
  }
  return v.dump();
}

nlohmann::json load_object(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file '" + file + "'");
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::runtime_error("config file '" + file + "' is not a JSON object");
  return j;
}

}  // namespace

std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string file;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw std::runtime_error("--config needs a file name");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    // items() only views the object, so it must outlive the loop.
    const nlohmann::json object = load_object(file);
    for (const auto& [key, value] : object.items()) {
      if (key.empty() || key[0] == '_') continue;
      std::string name = key;
      std::replace(name.begin(), name.end(), '_', '-');
      injected.push_back("--" + name + "=" + scalar_text(value));
    }
  }
  // Leading subcommand words stay in front.
  std::size_t head = 0;
  while (head < rest.size() && !rest[head].empty() && rest[head][0] != '-') ++head;
  std::vector<std::string> out(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(head));
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(head), rest.end());
  return out;
}

nlohmann::json resolved_config(const CLI::App& cmd, const std::string& command_path) {
  nlohmann::json j = nlohmann::json::object();
  j["_command"] = command_path;
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      value = opt->results().back();
    } else {
      value = opt->get_default_str();
      if (value.empty()) continue;
    }
    j[name] = value;
  }
  return j;
}

void write_run_config(const std::filesystem::path& path, const nlohmann::json& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << config.dump(2) << '\n';
}

}  // namespace utg::cli
