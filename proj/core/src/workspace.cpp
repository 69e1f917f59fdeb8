#include "stanloop/workspace.hpp"

#include <sys/stat.h>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "stanloop/errors.hpp"
#include "stanloop/io.hpp"
#include "stanloop/subprocess.hpp"

namespace fs = std::filesystem;

namespace stanloop::workspace {

namespace {

bool apply_mode(const fs::path& p, mode_t mode) { return ::chmod(p.c_str(), mode) == 0; }

mode_t current_mode(const fs::path& p) {
    struct stat st {};
    if (::stat(p.c_str(), &st) != 0) return static_cast<mode_t>(-1);
    return st.st_mode & 0777;
}

/// Reapplies mode 000 on destruction.
class ModeLift {
public:
    explicit ModeLift(const fs::path& p) : path_(p), prev_(current_mode(p)) {
        if (prev_ != static_cast<mode_t>(-1)) apply_mode(path_, 0600);
    }
    ~ModeLift() {
        if (prev_ != static_cast<mode_t>(-1)) apply_mode(path_, prev_);
    }

private:
    fs::path path_;
    mode_t prev_;
};

}  // namespace

bool ProtectionReport::fully_enforced() const {
    for (const auto& e : entries)
        if (e.status != Protection::enforced) return false;
    return !entries.empty();
}

std::string ProtectionReport::pretty() const {
    std::ostringstream out;
    for (const auto& e : entries) {
        out << e.file.string() << ": ";
        switch (e.status) {
            case Protection::enforced: out << "denied"; break;
            case Protection::advisory: out << "advisory-only"; break;
            case Protection::missing: out << "missing"; break;
        }
        if (!e.note.empty()) out << " (" << e.note << ")";
        out << "\n";
    }
    return out.str();
}

Workspace::Workspace(fs::path root, std::string dataset_name)
    : root_(std::move(root)), dataset_(std::move(dataset_name)) {}

Workspace Workspace::init(const datagen::GeneratedDataset& ds, const fs::path& root) {
    Workspace ws(root, ds.spec.name);
    fs::create_directories(ws.dataset_dir());
    fs::create_directories(ws.snapshots_dir());

    // lift existing protection so a re-init can rewrite byte-identical files
    for (const char* name : {"test.csv", "oracle.json"}) {
        const fs::path p = ws.protected_dir() / name;
        if (fs::exists(p)) apply_mode(p, 0600);
    }

    datagen::emit_dataset(ds, ws.dataset_dir());

    bool enforced = true;
    for (const char* name : {"test.csv", "oracle.json"}) {
        const fs::path p = ws.protected_dir() / name;
        if (!apply_mode(p, 0000)) enforced = false;
    }
    if (!enforced)
        std::cerr << "warning: could not apply protection modes to " << ws.protected_dir()
                  << "; test data is readable by any process (advisory protection only)\n";
    return ws;
}

void Workspace::install_model(const std::string& text) {
    io::atomic_write(model_path(), text);
}

std::string Workspace::current_model() const {
    if (!fs::exists(model_path())) return {};
    return io::read_file(model_path());
}

bool Workspace::has_model() const { return fs::exists(model_path()); }

std::string Workspace::snapshot() {
    if (!has_model()) throw std::runtime_error("snapshot: no model file at " +
                                               model_path().string());
    const std::string text = io::read_file(model_path());
    const std::string hash = io::sha256_hex(text);
    const fs::path stored = snapshots_dir() / (hash + ".stan");
    if (!fs::exists(stored)) {
        fs::create_directories(snapshots_dir());
        io::atomic_write(stored, text);
    }
    return hash;
}

std::string Workspace::snapshot_text(const std::string& hash) const {
    const fs::path stored = snapshots_dir() / (hash + ".stan");
    if (!fs::exists(stored)) throw invalid_input("unknown snapshot hash " + hash);
    return io::read_file(stored);
}

void Workspace::restore(const std::string& hash) {
    io::atomic_write(model_path(), snapshot_text(hash));
}

std::string Workspace::read_protected(const std::string& filename) const {
    const fs::path p = protected_dir() / filename;
    if (!fs::exists(p)) throw parse_error("protected file missing: " + p.string());
    ModeLift lift(p);
    return io::read_file(p);
}

ProtectionReport Workspace::verify_protection() const {
    ProtectionReport report;
    for (const char* name : {"test.csv", "oracle.json"}) {
        ProtectionEntry e;
        e.file = protected_dir() / name;
        if (!fs::exists(e.file)) {
            e.status = Protection::missing;
            report.entries.push_back(e);
            continue;
        }
        const mode_t mode = current_mode(e.file);
        const auto probe = subprocess::run_command({"cat", e.file.string()});
        if (probe.exit_code != 0) {
            e.status = Protection::enforced;
        } else {
            e.status = Protection::advisory;
            if (mode == 0000) {
                e.note = "mode 000 set but this process is privileged";
            } else {
                char oct[16];
                std::snprintf(oct, sizeof(oct), "%03o", mode & 0777);
                e.note = "unexpected mode " + std::string(oct) + " on " +
                         e.file.filename().string();
            }
        }
        report.entries.push_back(e);
    }
    return report;
}

}  // namespace stanloop::workspace
