// Copyright 2026 The MobileDenseNet Authors. All Rights Reserved.
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
#ifndef MDN_CLI_HPP_
#define MDN_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace mdn {

// Entry point of the mdn tool. args excludes the program name. Returns the
// process exit code: 0 on success, 1 on a runtime failure, 2 on a usage
// error. Failures print one line to err and remove outputs created so far.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdn

#endif  // MDN_CLI_HPP_
