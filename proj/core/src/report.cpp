#include "shbkit/report.hpp"

#include <fstream>

#include "shbkit/csv.hpp"
#include "shbkit/errors.hpp"

namespace shbkit {

void Report::add(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
}

void Report::add(const std::string& key, double value) {
    entries_.emplace_back(key, format_double(value));
}

void Report::add(const std::string& key, bool value) {
    entries_.emplace_back(key, value ? "true" : "false");
}

void Report::add_comment(const std::string& text) { entries_.emplace_back("", text); }

std::string Report::to_text() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        if (key.empty())
            out += "# " + value + "\n";
        else
            out += key + " = " + value + "\n";
    }
    return out;
}

std::string Report::to_csv() const {
    std::string out = "key,value\n";
    for (const auto& [key, value] : entries_) {
        if (key.empty()) continue;
        out += key + "," + value + "\n";
    }
    return out;
}

std::string Report::csv_twin_path(const std::string& path) {
    const std::size_t slash = path.find_last_of('/');
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + ".csv";
    return path.substr(0, dot) + ".csv";
}

void Report::write(const std::string& path) const {
    std::ofstream text(path);
    if (!text) throw ValidationError("cannot write report '" + path + "'");
    text << to_text();
    const std::string csv_path = csv_twin_path(path);
    std::ofstream csv(csv_path);
    if (!csv) throw ValidationError("cannot write report '" + csv_path + "'");
    csv << to_csv();
}

}  // namespace shbkit
