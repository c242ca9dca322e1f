#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gaitopt/kernels.hpp"

namespace gaitopt {

/// Flat `key = value` document: one pair per line, `#` starts a comment,
/// blank lines ignored. Preserves insertion order for deterministic output;
/// duplicate keys are rejected.
class KeyValueDoc {
  public:
    static KeyValueDoc parse(const std::string& text);
    static KeyValueDoc load(const std::string& path);

    std::string serialize() const;
    void save(const std::string& path) const;

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fb) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fb) const;
    int get_int_or(const std::string& key, int fb) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fb) const;
    bool get_bool_or(const std::string& key, bool fb) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, long long value);
    void set_u64(const std::string& key, std::uint64_t value);
    void set_bool(const std::string& key, bool value);

    const std::vector<std::pair<std::string, std::string>>& items() const {
        return items_;
    }

  private:
    std::vector<std::pair<std::string, std::string>> items_;
    int find(const std::string& key) const;
};

/// Full-precision, locale-independent double formatting shared by every
/// serializer (shortest form via %.17g).
std::string format_double(double v);

/// Hyperparameter round trip through the flat key-value form. Keys:
/// kernel, length_scale.wavelength, length_scale.duty, signal_std,
/// noise_std, mean_const, rq_alpha; TwoMatern uses .m52/.m32 suffixes on
/// the per-summand keys.
KeyValueDoc hyperparams_to_kv(const Hyperparams& hp);
Hyperparams hyperparams_from_kv(const KeyValueDoc& doc);

} // namespace gaitopt
