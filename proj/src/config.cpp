#include "gaitopt/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gaitopt/errors.hpp"

namespace gaitopt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

KeyValueDoc KeyValueDoc::parse(const std::string& text) {
    KeyValueDoc doc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(lineno) +
                            ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw DataError("config line " + std::to_string(lineno) +
                            ": empty key");
        if (doc.has(key))
            throw DataError("duplicate config key: " + key);
        doc.items_.emplace_back(key, value);
    }
    return doc;
}

KeyValueDoc KeyValueDoc::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KeyValueDoc::serialize() const {
    std::string out;
    for (const auto& [k, v] : items_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void KeyValueDoc::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write config file: " + path);
    out << serialize();
}

int KeyValueDoc::find(const std::string& key) const {
    for (std::size_t i = 0; i < items_.size(); ++i)
        if (items_[i].first == key) return static_cast<int>(i);
    return -1;
}

bool KeyValueDoc::has(const std::string& key) const { return find(key) >= 0; }

const std::string& KeyValueDoc::get(const std::string& key) const {
    int i = find(key);
    if (i < 0) throw DataError("missing config key: " + key);
    return items_[static_cast<std::size_t>(i)].second;
}

std::string KeyValueDoc::get_or(const std::string& key,
                                const std::string& fb) const {
    int i = find(key);
    return i < 0 ? fb : items_[static_cast<std::size_t>(i)].second;
}

double KeyValueDoc::get_double(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError("config key " + key + ": not a number: " + s);
    return v;
}

double KeyValueDoc::get_double_or(const std::string& key, double fb) const {
    return has(key) ? get_double(key) : fb;
}

int KeyValueDoc::get_int_or(const std::string& key, int fb) const {
    if (!has(key)) return fb;
    double v = get_double(key);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw DataError("config key " + key + ": not an integer");
    return i;
}

std::uint64_t KeyValueDoc::get_u64_or(const std::string& key,
                                      std::uint64_t fb) const {
    if (!has(key)) return fb;
    const std::string& s = get(key);
    char* end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw DataError("config key " + key + ": not an unsigned integer");
    return v;
}

bool KeyValueDoc::get_bool_or(const std::string& key, bool fb) const {
    if (!has(key)) return fb;
    const std::string& s = get(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw DataError("config key " + key + ": expected true/false");
}

void KeyValueDoc::set(const std::string& key, const std::string& value) {
    int i = find(key);
    if (i >= 0)
        items_[static_cast<std::size_t>(i)].second = value;
    else
        items_.emplace_back(key, value);
}

void KeyValueDoc::set_double(const std::string& key, double value) {
    set(key, format_double(value));
}

void KeyValueDoc::set_int(const std::string& key, long long value) {
    set(key, std::to_string(value));
}

void KeyValueDoc::set_u64(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

void KeyValueDoc::set_bool(const std::string& key, bool value) {
    set(key, value ? "true" : "false");
}

KeyValueDoc hyperparams_to_kv(const Hyperparams& hp) {
    hp.validate();
    KeyValueDoc doc;
    doc.set("kernel", kernel_name(hp.kind));
    if (hp.kind == KernelKind::TwoMatern) {
        const char* suffix[2] = {".m52", ".m32"};
        for (int c = 0; c < 2; ++c) {
            const auto& comp = hp.components[static_cast<std::size_t>(c)];
            doc.set_double(std::string("length_scale.wavelength") + suffix[c],
                           comp.length_scales[0]);
            doc.set_double(std::string("length_scale.duty") + suffix[c],
                           comp.length_scales[1]);
            doc.set_double(std::string("signal_std") + suffix[c],
                           comp.signal_std);
        }
    } else {
        doc.set_double("length_scale.wavelength",
                       hp.components[0].length_scales[0]);
        doc.set_double("length_scale.duty", hp.components[0].length_scales[1]);
        doc.set_double("signal_std", hp.components[0].signal_std);
        if (hp.kind == KernelKind::RationalQuadratic)
            doc.set_double("rq_alpha", hp.rq_alpha);
    }
    doc.set_double("noise_std", hp.noise_std);
    doc.set_double("mean_const", hp.mean_const);
    return doc;
}

Hyperparams hyperparams_from_kv(const KeyValueDoc& doc) {
    Hyperparams hp;
    hp.kind = kernel_from_name(doc.get("kernel"));
    if (hp.kind == KernelKind::TwoMatern) {
        hp.components.resize(2);
        const char* suffix[2] = {".m52", ".m32"};
        for (int c = 0; c < 2; ++c) {
            auto& comp = hp.components[static_cast<std::size_t>(c)];
            comp.length_scales[0] = doc.get_double(
                std::string("length_scale.wavelength") + suffix[c]);
            comp.length_scales[1] =
                doc.get_double(std::string("length_scale.duty") + suffix[c]);
            comp.signal_std =
                doc.get_double(std::string("signal_std") + suffix[c]);
        }
    } else {
        hp.components.resize(1);
        hp.components[0].length_scales[0] =
            doc.get_double("length_scale.wavelength");
        hp.components[0].length_scales[1] = doc.get_double("length_scale.duty");
        hp.components[0].signal_std = doc.get_double("signal_std");
        if (hp.kind == KernelKind::RationalQuadratic)
            hp.rq_alpha = doc.get_double("rq_alpha");
    }
    hp.noise_std = doc.get_double("noise_std");
    hp.mean_const = doc.get_double("mean_const");
    hp.validate();
    return hp;
}

} // namespace gaitopt
