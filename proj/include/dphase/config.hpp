#pragma once

// Line-oriented experiment configuration:
//
//   [domain]     type = interval|rectangle, a, b, (c, d), n | nx, ny
//   [exponents]  p, q, (N)
//   [mu]         type = constant (value) | affine (a, b: a + b x1) | builtin (name = x1|radial|zero)
//   [f]          type = power (coefficient, r) | f1 (a, r) | f2 (a) | f3
//   [lambda]     value | multiple | sweep (comma list), sweep_mode = multiple|absolute
//   [solver]     tol, eigen_tol, tol_bound, max_iter, eigen_max_iter, seed
//   [output]     dir
//
// '#' starts a comment. Unknown sections or keys are rejected.

#include <dphase/errors.hpp>
#include <dphase/mesh.hpp>
#include <dphase/nonlinearity.hpp>
#include <dphase/orlicz.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dphase {

struct ConfigDiagnostic {
    std::string key; // "section.key"
    int line = 0;    // 0 when the key is missing altogether
    std::string reason;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigDiagnostic> diags)
        : Error(render(diags), ExitCode::config_error), diags_(std::move(diags)) {}

    const std::vector<ConfigDiagnostic>& diagnostics() const noexcept { return diags_; }

private:
    static std::string render(const std::vector<ConfigDiagnostic>& diags)
    {
        std::string s = "invalid configuration:";
        for (const auto& d : diags)
            s += "\n  " + d.key + (d.line > 0 ? " (line " + std::to_string(d.line) + ")" : "") + ": " + d.reason;
        return s;
    }

    std::vector<ConfigDiagnostic> diags_;
};

struct DomainSpec {
    bool rectangle = false;
    Rectangle box{};
    int nx = 1;
    int ny = 1;
};

struct MuSpec {
    enum class Kind { constant, affine, builtin } kind = Kind::constant;
    double value = 0.0;
    double a = 0.0;
    double b = 0.0;
    std::string name;
};

struct ReactionSpec {
    enum class Kind { power, f1, f2, f3 } kind = Kind::power;
    double coefficient = 1.0;
    double r = 4.0;
};

struct LambdaSpec {
    /// Each entry is absolute or a multiple of lambda_1,p.
    std::vector<double> values;
    bool multiple = true;
    bool sweep = false;
};

struct ExperimentConfig {
    DomainSpec domain;
    Exponents exps;
    MuSpec mu;
    ReactionSpec f;
    LambdaSpec lambda;
    double tol = 1e-8;
    double eigen_tol = 1e-10;
    double tol_bound = 1e-6;
    int max_iter = 500;
    int eigen_max_iter = 500;
    std::uint64_t seed = 42;
    std::string output_dir = "out";

    MeshPtr build_mesh() const
    {
        if (domain.rectangle)
            return dphase::build_mesh(domain.box, domain.nx, domain.ny);
        return dphase::build_mesh(Interval{domain.box.a, domain.box.b}, domain.nx);
    }

    ScalarField mu_field() const
    {
        switch (mu.kind) {
        case MuSpec::Kind::constant:
            return [c = mu.value](const Point&) { return c; };
        case MuSpec::Kind::affine:
            return [a = mu.a, b = mu.b](const Point& x) { return a + b * x[0]; };
        case MuSpec::Kind::builtin:
            break;
        }
        if (mu.name == "x1")
            return [](const Point& x) { return x[0]; };
        if (mu.name == "radial")
            return [](const Point& x) { return x[0] * x[0] + x[1] * x[1]; };
        return [](const Point&) { return 0.0; };
    }

    Nonlinearity nonlinearity() const
    {
        const double a = f.coefficient;
        switch (f.kind) {
        case ReactionSpec::Kind::power:
            return make_power(a, f.r);
        case ReactionSpec::Kind::f1:
            return make_f1([a](const Point&) { return a; }, f.r);
        case ReactionSpec::Kind::f2:
            return make_f2([a](const Point&) { return a; }, exps.q);
        case ReactionSpec::Kind::f3:
            return make_f3(exps.p, exps.q);
        }
        return make_power(a, f.r);
    }
};

namespace detail {

struct RawEntry {
    std::string value;
    int line = 0;
};

} // namespace detail

/// Parses and validates a configuration; throws ConfigError with every
/// diagnostic found.
inline ExperimentConfig parse_config(const std::string& text)
{
    static const std::map<std::string, std::set<std::string>> schema{
        {"domain", {"type", "a", "b", "c", "d", "n", "nx", "ny"}},
        {"exponents", {"p", "q", "N"}},
        {"mu", {"type", "value", "a", "b", "name"}},
        {"f", {"type", "coefficient", "a", "r"}},
        {"lambda", {"value", "multiple", "sweep", "sweep_mode"}},
        {"solver", {"tol", "eigen_tol", "tol_bound", "max_iter", "eigen_max_iter", "seed"}},
        {"output", {"dir"}},
    };

    std::vector<ConfigDiagnostic> diags;
    std::map<std::string, detail::RawEntry> raw;
    std::string section;
    int lineno = 0;
    std::size_t pos = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                diags.push_back({line, lineno, "malformed section header"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!schema.count(section))
                diags.push_back({section, lineno, "unknown section"});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            diags.push_back({section.empty() ? line : section + "." + line, lineno, "expected key = value"});
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string full = section + "." + key;
        if (section.empty()) {
            diags.push_back({key, lineno, "key outside of any section"});
            continue;
        }
        auto sec = schema.find(section);
        if (sec == schema.end())
            continue;
        if (!sec->second.count(key)) {
            diags.push_back({full, lineno, "unknown key"});
            continue;
        }
        if (raw.count(full)) {
            diags.push_back({full, lineno, "duplicate key"});
            continue;
        }
        raw[full] = {trim(line.substr(eq + 1)), lineno};
    }

    auto has = [&](const std::string& k) { return raw.count(k) > 0; };
    auto line_of = [&](const std::string& k) { return has(k) ? raw[k].line : 0; };
    auto text_of = [&](const std::string& k, std::optional<std::string> fallback = std::nullopt) {
        if (has(k))
            return raw[k].value;
        if (!fallback)
            diags.push_back({k, 0, "missing required key"});
        return fallback.value_or("");
    };
    auto number = [&](const std::string& k, std::optional<double> fallback = std::nullopt) -> double {
        if (!has(k)) {
            if (!fallback)
                diags.push_back({k, 0, "missing required key"});
            return fallback.value_or(0.0);
        }
        try {
            return detail::parse_double(raw[k].value);
        } catch (const InputError&) {
            diags.push_back({k, raw[k].line, "malformed number '" + raw[k].value + "'"});
            return fallback.value_or(0.0);
        }
    };
    auto integer = [&](const std::string& k, std::optional<long long> fallback = std::nullopt) -> long long {
        const double v = number(k, fallback ? std::optional<double>(static_cast<double>(*fallback)) : std::nullopt);
        if (has(k) && v != std::floor(v)) {
            diags.push_back({k, line_of(k), "integer required"});
            return fallback.value_or(0);
        }
        return static_cast<long long>(v);
    };

    ExperimentConfig cfg;

    // [domain]
    const std::string dtype = text_of("domain.type");
    if (!dtype.empty() && dtype != "interval" && dtype != "rectangle")
        diags.push_back({"domain.type", line_of("domain.type"), "expected interval or rectangle"});
    cfg.domain.rectangle = dtype == "rectangle";
    cfg.domain.box.a = number("domain.a", 0.0);
    cfg.domain.box.b = number("domain.b", 1.0);
    cfg.domain.box.c = number("domain.c", 0.0);
    cfg.domain.box.d = number("domain.d", 1.0);
    if (!(cfg.domain.box.a < cfg.domain.box.b))
        diags.push_back({"domain.b", line_of("domain.b"), "a < b required"});
    if (cfg.domain.rectangle && !(cfg.domain.box.c < cfg.domain.box.d))
        diags.push_back({"domain.d", line_of("domain.d"), "c < d required"});
    if (has("domain.n")) {
        cfg.domain.nx = cfg.domain.ny = static_cast<int>(integer("domain.n"));
    } else if (has("domain.nx")) {
        cfg.domain.nx = static_cast<int>(integer("domain.nx"));
        cfg.domain.ny = static_cast<int>(integer("domain.ny", cfg.domain.nx));
    } else {
        diags.push_back({"domain.n", 0, "missing required key"});
    }
    if (cfg.domain.nx < 1 || cfg.domain.ny < 1)
        diags.push_back({"domain.n", line_of("domain.n") ? line_of("domain.n") : line_of("domain.nx"),
                         "resolution >= 1 required"});

    // [exponents]
    cfg.exps.p = number("exponents.p");
    cfg.exps.q = number("exponents.q");
    cfg.exps.N = static_cast<int>(integer("exponents.N", cfg.domain.rectangle ? 2 : 1));
    if (has("exponents.p") && has("exponents.q")) {
        if (!(cfg.exps.p > 1.0))
            diags.push_back({"exponents.p", line_of("exponents.p"), "p > 1 required"});
        if (!(cfg.exps.p < cfg.exps.q))
            diags.push_back({"exponents.q", line_of("exponents.q"), "p < q required"});
    }
    if (cfg.exps.N < 1)
        diags.push_back({"exponents.N", line_of("exponents.N"), "N >= 1 required"});

    // [mu]
    const std::string mtype = text_of("mu.type");
    if (mtype == "constant") {
        cfg.mu.kind = MuSpec::Kind::constant;
        cfg.mu.value = number("mu.value");
        if (has("mu.value") && !(cfg.mu.value >= 0.0))
            diags.push_back({"mu.value", line_of("mu.value"), "μ ≥ 0 required"});
    } else if (mtype == "affine") {
        cfg.mu.kind = MuSpec::Kind::affine;
        cfg.mu.a = number("mu.a");
        cfg.mu.b = number("mu.b");
        // a + b x1 must be nonnegative at both ends of the x1 range.
        const double lo = cfg.mu.a + cfg.mu.b * cfg.domain.box.a;
        const double hi = cfg.mu.a + cfg.mu.b * cfg.domain.box.b;
        if (!(lo >= 0.0 && hi >= 0.0))
            diags.push_back({"mu.b", line_of("mu.b"), "μ ≥ 0 required on the domain"});
    } else if (mtype == "builtin") {
        cfg.mu.kind = MuSpec::Kind::builtin;
        cfg.mu.name = text_of("mu.name");
        if (!cfg.mu.name.empty() && cfg.mu.name != "x1" && cfg.mu.name != "radial" && cfg.mu.name != "zero")
            diags.push_back({"mu.name", line_of("mu.name"), "expected x1, radial or zero"});
        if (cfg.mu.name == "x1" && cfg.domain.box.a < 0.0)
            diags.push_back({"mu.name", line_of("mu.name"), "μ ≥ 0 required on the domain"});
    } else if (!mtype.empty()) {
        diags.push_back({"mu.type", line_of("mu.type"), "expected constant, affine or builtin"});
    }

    // [f]
    const std::string ftype = text_of("f.type");
    if (ftype == "power") {
        cfg.f.kind = ReactionSpec::Kind::power;
        cfg.f.coefficient = number("f.coefficient", 1.0);
        cfg.f.r = number("f.r");
    } else if (ftype == "f1") {
        cfg.f.kind = ReactionSpec::Kind::f1;
        cfg.f.coefficient = number("f.a", 1.0);
        cfg.f.r = number("f.r");
    } else if (ftype == "f2") {
        cfg.f.kind = ReactionSpec::Kind::f2;
        cfg.f.coefficient = number("f.a", 1.0);
    } else if (ftype == "f3") {
        cfg.f.kind = ReactionSpec::Kind::f3;
    } else if (!ftype.empty()) {
        diags.push_back({"f.type", line_of("f.type"), "expected power, f1, f2 or f3"});
    }
    if ((ftype == "power" || ftype == "f1") && has("f.r") && !(cfg.f.r > 1.0))
        diags.push_back({"f.r", line_of("f.r"), "r > 1 required"});

    // [lambda]
    const int given = (has("lambda.value") ? 1 : 0) + (has("lambda.multiple") ? 1 : 0) + (has("lambda.sweep") ? 1 : 0);
    if (given == 0)
        diags.push_back({"lambda.value", 0, "missing required key (value, multiple or sweep)"});
    else if (given > 1)
        diags.push_back({"lambda", line_of("lambda.value") + line_of("lambda.multiple") + line_of("lambda.sweep"),
                         "give exactly one of value, multiple, sweep"});
    if (has("lambda.value")) {
        cfg.lambda.values = {number("lambda.value")};
        cfg.lambda.multiple = false;
    } else if (has("lambda.multiple")) {
        cfg.lambda.values = {number("lambda.multiple")};
        cfg.lambda.multiple = true;
    } else if (has("lambda.sweep")) {
        cfg.lambda.sweep = true;
        const std::string mode = text_of("lambda.sweep_mode", std::string("multiple"));
        if (mode != "multiple" && mode != "absolute")
            diags.push_back({"lambda.sweep_mode", line_of("lambda.sweep_mode"), "expected multiple or absolute"});
        cfg.lambda.multiple = mode != "absolute";
        const std::string list = raw["lambda.sweep"].value;
        std::size_t start = 0;
        while (start <= list.size()) {
            auto comma = list.find(',', start);
            const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            try {
                cfg.lambda.values.push_back(detail::parse_double(item));
            } catch (const InputError&) {
                diags.push_back({"lambda.sweep", line_of("lambda.sweep"), "malformed number '" + trim(item) + "'"});
            }
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
    }
    for (double v : cfg.lambda.values)
        if (!(v > 0.0))
            diags.push_back({"lambda", line_of("lambda.value") + line_of("lambda.multiple") + line_of("lambda.sweep"),
                             "lambda > 0 required"});

    // [solver]
    cfg.tol = number("solver.tol", cfg.tol);
    cfg.eigen_tol = number("solver.eigen_tol", cfg.eigen_tol);
    cfg.tol_bound = number("solver.tol_bound", cfg.tol_bound);
    cfg.max_iter = static_cast<int>(integer("solver.max_iter", cfg.max_iter));
    cfg.eigen_max_iter = static_cast<int>(integer("solver.eigen_max_iter", cfg.eigen_max_iter));
    cfg.seed = static_cast<std::uint64_t>(integer("solver.seed", static_cast<long long>(cfg.seed)));
    for (const char* k : {"solver.tol", "solver.eigen_tol", "solver.tol_bound"})
        if (has(k) && !(number(k) > 0.0))
            diags.push_back({k, line_of(k), "positive value required"});
    for (const char* k : {"solver.max_iter", "solver.eigen_max_iter"})
        if (has(k) && integer(k) < 1)
            diags.push_back({k, line_of(k), "positive value required"});

    // [output]
    cfg.output_dir = text_of("output.dir", cfg.output_dir);

    if (!diags.empty())
        throw ConfigError(std::move(diags));
    return cfg;
}

} // namespace dphase
