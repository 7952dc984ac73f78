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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace CLI {
class App;
}

namespace utg::cli {

/// Replaces `--config FILE` (or `--config=FILE`) with `--key=value` pairs
/// from the JSON object in FILE. The pairs are spliced in right after the
/// leading subcommand words, so any flag given on the command line comes
/// later and wins under a take-last policy. Keys may use '_' or '-'; keys
/// starting with '_' are ignored; arrays become comma-joined lists.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args);

/// Every long option of `cmd` (except help and config) with its effective
/// value, plus "_command" naming the subcommand path.
nlohmann::json resolved_config(const CLI::App& cmd, const std::string& command_path);

void write_run_config(const std::filesystem::path& path, const nlohmann::json& config);

}  // namespace utg::cli
