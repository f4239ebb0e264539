#include "warmmem/csv.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "warmmem/config.hpp"
#include "warmmem/errors.hpp"

namespace warmmem {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

CsvTable ingest_csv(const std::filesystem::path& path, const std::vector<std::string>& required,
                    const std::vector<std::string>& optional) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    const std::string file = path.filename().string();

    CsvTable table;
    bool have_header = false;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::vector<std::string> cells = split(line);
        if (!have_header) {
            table.columns = cells;
            for (const std::string& c : cells) {
                const bool known = std::find(required.begin(), required.end(), c) != required.end() ||
                                   std::find(optional.begin(), optional.end(), c) != optional.end();
                if (!known)
                    throw ParseError(file + ": row " + std::to_string(line_no) + ": unexpected column '" + c + "'");
                if (std::count(cells.begin(), cells.end(), c) > 1)
                    throw ParseError(file + ": row " + std::to_string(line_no) + ": duplicate column '" + c + "'");
            }
            for (const std::string& r : required)
                if (std::find(cells.begin(), cells.end(), r) == cells.end())
                    throw ParseError(file + ": row " + std::to_string(line_no) + ": missing column '" + r + "'");
            have_header = true;
            continue;
        }
        if (cells.size() != table.columns.size())
            throw ParseError(file + ": row " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.columns.size()) + " columns, found " +
                             std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c)
            row.push_back(parse_double(cells[c], file + ": row " + std::to_string(line_no) + ", column '" +
                                                     table.columns[c] + "'"));
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw ParseError(file + ": no header row");
    return table;
}

}  // namespace warmmem
