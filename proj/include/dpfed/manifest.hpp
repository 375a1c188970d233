// Copyright 2026 the dpfedsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPFED_MANIFEST_HPP
#define DPFED_MANIFEST_HPP

#include <string>
#include <vector>

#include "dpfed/privacy_accounting.hpp"

namespace dpfed::harness {

// Client manifest: UTF-8, LF line endings, a fixed header line
//   id,dataset_size,epsilon,delta,subsampling_ratio
// then one comma-separated record per client. read(write(x)) is the identity
// on valid records. Parse failures raise data::ParseError with a line number.
std::vector<privacy::ClientProfile> read_manifest(const std::string& path);
std::vector<privacy::ClientProfile> parse_manifest(const std::string& content);
std::string render_manifest(const std::vector<privacy::ClientProfile>& profiles);
void write_manifest(const std::string& path, const std::vector<privacy::ClientProfile>& profiles);

}  // namespace dpfed::harness

#endif  // DPFED_MANIFEST_HPP
