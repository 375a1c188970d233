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

#include "dpfed/manifest.hpp"

#include <fstream>
#include <sstream>

#include "dpfed/data.hpp"
#include "dpfed/text.hpp"

namespace dpfed::harness {

namespace {
constexpr std::string_view kHeader = "id,dataset_size,epsilon,delta,subsampling_ratio";

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw data::ParseError("manifest line " + std::to_string(line) + ": " + what);
}
}  // namespace

std::vector<privacy::ClientProfile> parse_manifest(const std::string& content) {
  std::vector<privacy::ClientProfile> profiles;
  std::size_t line_number = 0;
  std::size_t start = 0;
  bool saw_header = false;
  while (start <= content.size()) {
    const std::size_t end = content.find('\n', start);
    std::string_view line(content.data() + start,
                          (end == std::string::npos ? content.size() : end) - start);
    start = (end == std::string::npos) ? content.size() + 1 : end + 1;
    ++line_number;
    line = text::trim(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kHeader) fail(line_number, "expected header '" + std::string(kHeader) + "'");
      saw_header = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 5)
      fail(line_number, "expected 5 fields, got " + std::to_string(fields.size()));
    std::int64_t id = 0;
    std::uint64_t size = 0;
    double epsilon = 0.0, delta = 0.0, ratio = 0.0;
    if (!text::parse_i64(fields[0], id)) fail(line_number, "bad id");
    if (!text::parse_u64(fields[1], size)) fail(line_number, "bad dataset_size");
    if (!text::parse_double(fields[2], epsilon)) fail(line_number, "bad epsilon");
    if (!text::parse_double(fields[3], delta)) fail(line_number, "bad delta");
    if (!text::parse_double(fields[4], ratio)) fail(line_number, "bad subsampling_ratio");
    try {
      profiles.push_back(privacy::make_client_profile(static_cast<int>(id), size,
                                                      privacy::PrivacyBudget{epsilon, delta},
                                                      ratio));
    } catch (const std::domain_error& e) {
      fail(line_number, e.what());
    }
  }
  if (!saw_header) throw data::ParseError("manifest: empty file (missing header)");
  if (profiles.empty()) throw data::ParseError("manifest: no client records");
  return profiles;
}

std::vector<privacy::ClientProfile> read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::ParseError("manifest: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

std::string render_manifest(const std::vector<privacy::ClientProfile>& profiles) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& profile : profiles) {
    out += std::to_string(profile.id);
    out += ',';
    out += std::to_string(profile.dataset_size);
    out += ',';
    out += text::format_double(profile.budget.epsilon);
    out += ',';
    out += text::format_double(profile.budget.delta);
    out += ',';
    out += text::format_double(profile.subsampling_ratio);
    out += '\n';
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<privacy::ClientProfile>& profiles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data::ParseError("manifest: cannot write '" + path + "'");
  out << render_manifest(profiles);
}

}  // namespace dpfed::harness
