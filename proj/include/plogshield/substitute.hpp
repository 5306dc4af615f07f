#pragma once

// Substitution: the third stage of each branch. A pseudonym map compiles
// into an immutable plan (one rule per canonical and per variant, ordered
// longest match token first); applying a plan is a single left-to-right
// pass in which a token is replaced only when boundary-delimited, and
// replaced spans are never rescanned.
//
// Rules for usernames that collide with a command name (the denylist) are
// structure-restricted: they fire only in user columns and path segments,
// so "joe" the editor survives while joe the user is pseudonymized.
//
// Replacement rendering:
//   - project rules match case-insensitively and mirror the matched
//     token's case class (lower/UPPER/Title), which is what makes
//     reverse-pseudonymization restore mixed-case originals exactly;
//   - user replacements written into a truncating user column (ps-aux,
//     top) are cut to 8 chars, mirroring what the Unix tools did to the
//     originals. Forward pseudonyms are exactly 8 chars so this only
//     matters when applying an inverted map.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "plogshield/core.hpp"
#include "plogshield/corpus.hpp"
#include "plogshield/extract.hpp"
#include "plogshield/pseudonym.hpp"

namespace plog {

struct Rule {
    std::string token;
    PiiKind kind = PiiKind::User;
    bool case_insensitive = false;
    std::string replacement;
    bool restricted = false;  // user columns and path segments only
};

struct SubstitutionPlan {
    std::vector<Rule> rules;  // longest token first, ties lexicographic
    std::unordered_map<std::string, std::size_t> exact;  // user/variant/ip tokens
    std::unordered_map<std::string, std::size_t> ci;     // lower(project token)

    bool empty() const { return rules.empty(); }
};

inline SubstitutionPlan compile_plan(const PseudonymMap& map,
                                     const std::vector<std::string>& denylist = default_denylist()) {
    validate_map_structure(map);

    std::set<std::string> deny(denylist.begin(), denylist.end());
    SubstitutionPlan plan;
    for (const auto& [orig, pseudo] : map.users)
        plan.rules.push_back(Rule{orig, PiiKind::User, false, pseudo, deny.count(orig) > 0});
    for (const auto& [variant, pseudo] : map.user_variants) {
        // In an inverted map the variant token equals its canonical's rule
        // token; the canonical rule plus column-aware truncation covers it.
        if (map.users.count(variant)) continue;
        plan.rules.push_back(Rule{variant, PiiKind::User, false, pseudo, deny.count(variant) > 0});
    }
    for (const auto& [orig, pseudo] : map.ips)
        plan.rules.push_back(Rule{orig, PiiKind::Ip, false, pseudo, false});
    for (const auto& [orig, pseudo] : map.projects)
        plan.rules.push_back(Rule{orig, PiiKind::Project, true, pseudo, false});

    std::sort(plan.rules.begin(), plan.rules.end(), [](const Rule& a, const Rule& b) {
        if (a.token.size() != b.token.size()) return a.token.size() > b.token.size();
        if (a.token != b.token) return a.token < b.token;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });

    std::set<std::string> exact_tokens;
    std::set<std::string> ci_tokens;
    for (const auto& r : plan.rules)
        (r.case_insensitive ? ci_tokens : exact_tokens).insert(
            r.case_insensitive ? to_lower_copy(r.token) : r.token);
    for (const auto& r : plan.rules) {
        auto clashes = [&](const std::string& s) {
            return exact_tokens.count(s) > 0 || ci_tokens.count(to_lower_copy(s)) > 0;
        };
        if (clashes(r.replacement))
            throw config_error("replacement matches a rule token: " + r.replacement);
        if (r.case_insensitive) {
            // Any rendered case form must stay clear of the other rules too.
            for (CaseClass cls : {CaseClass::Lower, CaseClass::Upper, CaseClass::Title})
                if (clashes(apply_case_class(cls, r.replacement)))
                    throw config_error("replacement case form matches a rule token: " +
                                       r.replacement);
        }
    }

    for (std::size_t i = 0; i < plan.rules.size(); ++i) {
        const Rule& r = plan.rules[i];
        if (r.case_insensitive)
            plan.ci.emplace(to_lower_copy(r.token), i);
        else
            plan.exact.emplace(r.token, i);
    }
    return plan;
}

struct ApplyResult {
    std::string text;
    std::vector<std::uint64_t> counts;  // per plan rule

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

namespace detail {

struct LineApplyCtx {
    const std::vector<Field>* fields = nullptr;
    std::optional<std::size_t> user_field;
    bool truncating = false;
};

inline void apply_to_line(std::string_view line, const SubstitutionPlan& plan,
                          const LineApplyCtx& ctx, std::string& out,
                          std::vector<std::uint64_t>& counts) {
    std::size_t cursor = 0;
    std::size_t fidx = 0;
    const auto& fields = *ctx.fields;

    scan_tokens(line, [&](Token t) {
        while (fidx < fields.size() && fields[fidx].span.end <= t.span.begin) ++fidx;
        if (fidx >= fields.size()) return;  // unreachable: tokens are non-space
        const Field& field = fields[fidx];

        std::string_view tok = line.substr(t.span.begin, t.span.size());
        bool in_user_col = ctx.user_field && fidx == *ctx.user_field && t.span == field.span;

        std::size_t best = plan.rules.size();
        auto consider = [&](std::size_t idx) {
            const Rule& r = plan.rules[idx];
            if (r.restricted && !in_user_col && !token_is_path_segment(line, field, t.span))
                return;
            best = std::min(best, idx);
        };
        if (t.is_ipv4) {
            auto it = plan.exact.find(std::string(tok));
            if (it != plan.exact.end()) consider(it->second);
        } else {
            auto it = plan.exact.find(std::string(tok));
            if (it != plan.exact.end()) consider(it->second);
            auto ci = plan.ci.find(to_lower_copy(tok));
            if (ci != plan.ci.end()) consider(ci->second);
        }
        if (best == plan.rules.size()) return;

        const Rule& rule = plan.rules[best];
        std::string replacement = rule.case_insensitive
                                      ? apply_case_class(case_class_of(tok), rule.replacement)
                                      : rule.replacement;
        if (rule.kind == PiiKind::User && ctx.truncating && in_user_col &&
            replacement.size() > kUserTruncWidth)
            replacement.resize(kUserTruncWidth);

        out.append(line.substr(cursor, t.span.begin - cursor));
        out.append(replacement);
        ++counts[best];
        cursor = t.span.end;
    });
    out.append(line.substr(cursor));
}

}  // namespace detail

// Plain-text application: no column knowledge, so restricted rules fire
// only inside path segments.
inline ApplyResult apply_plan(std::string_view raw_text, const SubstitutionPlan& plan) {
    ApplyResult result;
    result.counts.assign(plan.rules.size(), 0);
    LineSplit split = split_lines(raw_text);
    result.text.reserve(raw_text.size() + raw_text.size() / 8);
    for (std::size_t i = 0; i < split.lines.size(); ++i) {
        std::vector<Field> fields = split_fields(split.lines[i]);
        detail::LineApplyCtx ctx{&fields, std::nullopt, false};
        detail::apply_to_line(split.lines[i], plan, ctx, result.text, result.counts);
        if (i + 1 < split.lines.size() || split.final_newline) result.text.push_back('\n');
    }
    return result;
}

// Structure-aware application: restricted rules additionally fire in user
// columns, and user replacements in truncating columns are cut to width.
inline ApplyResult apply_plan_structured(const SnapshotFile& file, const SubstitutionPlan& plan) {
    ApplyResult result;
    result.counts.assign(plan.rules.size(), 0);
    std::vector<std::string> lines;
    lines.reserve(file.line_count);
    visit_lines(file, [&](const std::string& line, const LineInfo& info) {
        std::string out;
        detail::LineApplyCtx ctx{info.fields, info.user_field, info.truncating};
        detail::apply_to_line(line, plan, ctx, out, result.counts);
        lines.push_back(std::move(out));
    });
    result.text = join_lines(lines, file.final_newline);
    return result;
}

// Replacement totals per kind, in User/Ip/Project order.
inline std::array<std::uint64_t, 3> counts_by_kind(const SubstitutionPlan& plan,
                                                   const std::vector<std::uint64_t>& counts) {
    std::array<std::uint64_t, 3> out{0, 0, 0};
    for (std::size_t i = 0; i < plan.rules.size() && i < counts.size(); ++i)
        out[static_cast<std::size_t>(plan.rules[i].kind)] += counts[i];
    return out;
}

}  // namespace plog
