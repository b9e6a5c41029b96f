// SPDX-License-Identifier: Apache-2.0
//
// cranec: delay-QoS-aware power allocation for multi-point downlinks
// Copyright (C) 2026 The cranec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Minimal CSV emission with a provenance comment line. Numbers go through
// one formatter so reruns are byte-identical.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace cranec::csv
{

inline std::string number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

class Table
{
  public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    Table &row() { rows_.emplace_back(); return *this; }
    Table &add(double v) { rows_.back().push_back(number(v)); return *this; }
    Table &add(const std::string &s) { rows_.back().push_back(s); return *this; }
    Table &add(const char *s) { rows_.back().emplace_back(s); return *this; }
    Table &add(std::size_t v) { rows_.back().push_back(std::to_string(v)); return *this; }
    Table &add(bool v) { rows_.back().emplace_back(v ? "1" : "0"); return *this; }
    template <class Range>
    Table &add_all(const Range &r)
    {
        for (double v : r)
            add(v);
        return *this;
    }

    std::size_t rows() const { return rows_.size(); }

    /// `# cranec <command> config_hash=<hex> seed=<n>` then header then rows.
    std::string render(const std::string &command, const std::string &hash, std::uint64_t seed) const
    {
        std::ostringstream os;
        os << "# cranec " << command << " config_hash=" << hash << " seed=" << seed << '\n';
        join(os, header_);
        for (const auto &r : rows_)
            join(os, r);
        return os.str();
    }

  private:
    static void join(std::ostringstream &os, const std::vector<std::string> &cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i)
            os << (i ? "," : "") << cells[i];
        os << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// header cells "<prefix>_1" ... "<prefix>_n".
inline std::vector<std::string> numbered(const std::string &prefix, std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i)
        out.push_back(prefix + "_" + std::to_string(i));
    return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string> &b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace cranec::csv
