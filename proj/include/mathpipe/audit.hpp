#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mathpipe/types.hpp"

namespace mathpipe {

// Append-only log of pipeline mutations: one JSON object per line. Removal
// entries follow the audit schema {id, removed_reason, detail}; other
// mutations log {event, ...} counters. Content is deterministic (no
// timestamps, no absolute paths) so re-runs are byte-identical.
class AuditLog {
public:
    void removal(const std::string& id, RemovedReason reason, const std::string& detail);
    void event(const std::string& name,
               const std::vector<std::pair<std::string, std::string>>& fields = {});

    const std::vector<std::string>& lines() const { return lines_; }
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> lines_;
};

}  // namespace mathpipe
