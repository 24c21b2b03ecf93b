// Copyright 2026 The visualgpt-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace vgpt {

std::string read_text_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

/// Writes to `path + ".tmp"` and renames over `path`, so readers never see a
/// partially written file.
void write_text_atomic(const std::string& path, const std::string& contents);

}  // namespace vgpt
