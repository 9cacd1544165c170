#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optexec/closed_form.hpp"
#include "optexec/errors.hpp"
#include "optexec/hjb_solver.hpp"
#include "optexec/impact_model.hpp"

namespace optexec {

inline constexpr const char* kVersion = "0.1.0";

/// Environment variable that overrides [output] dir.
inline constexpr const char* kOutputDirEnv = "OPTEXEC_OUTPUT_DIR";

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct ProblemSpec {
    double c0 = 0.0;
    double x0 = 0.0;
    double s0 = 1.0;
    double horizon = 1.0;
};

struct SolverSpec {
    HjbOptions options;
    double x_max = 0.0;  // 0 selects 2 x0
    bool refinement = true;
};

struct SimSpec {
    std::size_t n_paths = 10000;
    std::size_t n_steps = 1000;
    std::uint64_t seed = 1;
    double y_min = -60.0;
    std::size_t keep_paths = 0;
    std::string strategy = "twap";
};

/// INI-style configuration: sections of key = value strings with typed
/// accessors for the documented schema.
class RunConfig {
public:
    using Section = std::map<std::string, std::string>;

    RunConfig() = default;
    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(const std::string& text);

    /// Applies "section.key=value".
    void apply_override(const std::string& assignment);
    void set(const std::string& section, const std::string& key, const std::string& value);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;
    const Section& section(const std::string& name) const;
    const std::map<std::string, Section>& sections() const noexcept { return sections_; }

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    ImpactModel impact() const;
    /// Either (mu, sigma) or mu_tilde (with optional sigma); both must agree
    /// to 1e-12 when all three are given.
    MarketParams market() const;
    ProblemSpec problem() const;
    SolverSpec solver() const;
    SimSpec sim() const;
    unsigned threads() const;
    /// [output] dir, overridden by OPTEXEC_OUTPUT_DIR.
    std::filesystem::path output_dir() const;

    /// Round-trippable INI text, sections and keys sorted.
    std::string to_ini() const;

private:
    std::map<std::string, Section> sections_;
};

}  // namespace optexec
