// Copyright 2026 The softmar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MAR_CLI_HPP_
#define MAR_CLI_HPP_

#include <iosfwd>
#include <span>
#include <string>

namespace mar {

// Runs one command. `args` excludes the program name. Returns the process
// exit status: 0 on success, 1 on usage errors, 2 on data errors and 3 on
// numerical failures.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace mar

#endif  // MAR_CLI_HPP_
