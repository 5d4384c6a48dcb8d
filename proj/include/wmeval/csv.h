// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WMEVAL_CSV_H_
#define WMEVAL_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace wmeval {

// Splits one CSV record. Handles double-quoted cells with "" escapes; does
// not handle records spanning lines.
std::vector<std::string> SplitCsvLine(std::string_view line);

// Drops a trailing '\r' and surrounding blanks.
std::string TrimLineEnd(std::string_view line);

// Quotes a cell only if it needs it.
std::string CsvCell(std::string_view cell);

}  // namespace wmeval

#endif  // WMEVAL_CSV_H_
