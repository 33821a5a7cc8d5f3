#include "mathpipe/audit.hpp"

#include <fstream>

#include "json_util.hpp"

namespace mathpipe {

void AuditLog::removal(const std::string& id, RemovedReason reason, const std::string& detail) {
    ojson j;
    j["id"] = id;
    j["removed_reason"] = to_string(reason);
    j["detail"] = detail;
    lines_.push_back(j.dump());
}

void AuditLog::event(const std::string& name,
                     const std::vector<std::pair<std::string, std::string>>& fields) {
    ojson j;
    j["event"] = name;
    for (const auto& [key, value] : fields) j[key] = value;
    lines_.push_back(j.dump());
}

void AuditLog::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::FileNotFound, "cannot write audit log " + path.string());
    for (const std::string& line : lines_) out << line << "\n";
}

}  // namespace mathpipe
