#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stanloop/datagen.hpp"

namespace stanloop::workspace {

enum class Protection { enforced, advisory, missing };

struct ProtectionEntry {
    std::filesystem::path file;
    Protection status = Protection::missing;
    std::string note;
};

struct ProtectionReport {
    std::vector<ProtectionEntry> entries;
    bool fully_enforced() const;
    std::string pretty() const;
};

/// Experiment directory tree:
///   <root>/model.stan
///   <root>/datasets/<name>/{train.csv, dataset.md, protected/{test.csv, oracle.json}}
///   <root>/results/<name>/{log.jsonl, report.md, snapshots/}
/// Protected files carry mode 000 so a proposer subprocess cannot read
/// them; the harness itself lifts the mode only for the duration of a
/// read.
class Workspace {
public:
    Workspace(std::filesystem::path root, std::string dataset_name);

    /// Materialize the tree from a generated dataset and apply the
    /// protection modes. Idempotent over identical inputs. On platforms
    /// where modes cannot be applied, degrades to advisory with a
    /// warning on stderr.
    static Workspace init(const datagen::GeneratedDataset& ds, const std::filesystem::path& root);

    const std::filesystem::path& root() const { return root_; }
    const std::string& dataset_name() const { return dataset_; }

    std::filesystem::path dataset_dir() const { return root_ / "datasets" / dataset_; }
    std::filesystem::path protected_dir() const { return dataset_dir() / "protected"; }
    std::filesystem::path descriptor_path() const { return dataset_dir() / "dataset.md"; }
    std::filesystem::path train_path() const { return dataset_dir() / "train.csv"; }
    std::filesystem::path results_dir() const { return root_ / "results" / dataset_; }
    std::filesystem::path log_path() const { return results_dir() / "log.jsonl"; }
    std::filesystem::path report_path() const { return results_dir() / "report.md"; }
    std::filesystem::path snapshots_dir() const { return results_dir() / "snapshots"; }
    std::filesystem::path model_path() const { return root_ / "model.stan"; }

    void install_model(const std::string& text);
    std::string current_model() const;  // empty when no model installed yet
    bool has_model() const;

    /// Byte-exact copy of model.stan keyed by content hash.
    std::string snapshot();
    void restore(const std::string& hash);
    std::string snapshot_text(const std::string& hash) const;  // throws on unknown hash

    /// Harness-only read of a protected file (lifts mode 000 for the
    /// duration of the read, then reapplies it).
    std::string read_protected(const std::string& filename) const;

    /// Probes each protected file for readability from a child process
    /// and reports enforced/advisory per file.
    ProtectionReport verify_protection() const;

private:
    std::filesystem::path root_;
    std::string dataset_;
};

}  // namespace stanloop::workspace
