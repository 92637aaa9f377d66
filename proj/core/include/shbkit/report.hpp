// Fit reports: ordered key = value text plus the same content as a
// two-column CSV next to it.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace shbkit {

class Report {
public:
    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, double value);  // 17 significant digits
    void add(const std::string& key, bool value);
    void add_comment(const std::string& text);

    std::string to_text() const;
    std::string to_csv() const;  // header key,value

    // Writes <path> as text and the CSV twin (extension replaced by .csv,
    // or .csv appended when there is none).
    void write(const std::string& path) const;
    static std::string csv_twin_path(const std::string& path);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;  // key "" = comment
};

}  // namespace shbkit
