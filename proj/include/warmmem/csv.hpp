#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace warmmem {

/// Numeric CSV table with a header row.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> line_numbers;  ///< 1-based file line of each row

    /// Index of a column, or -1.
    int column(const std::string& name) const;
};

/// Reads `path`, skipping blank lines and lines starting with `#`. The header
/// must contain every `required` column, may contain `optional` ones and
/// nothing else. Cells are parsed with a dot decimal separator regardless of
/// locale. Throws ParseError citing the row (file line) and column on a header
/// mismatch, non-numeric cell or wrong column count; std::runtime_error if the
/// file cannot be opened.
CsvTable ingest_csv(const std::filesystem::path& path, const std::vector<std::string>& required,
                    const std::vector<std::string>& optional = {});

}  // namespace warmmem
