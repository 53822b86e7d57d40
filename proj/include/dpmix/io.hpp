#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace dpmix {

// All floating-point output (CSV and JSON) uses 17 significant digits.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal JSON emitter with caller-controlled key order; numbers go through
// fmt17 so files are byte-stable for identical inputs.
class JsonWriter {
public:
  JsonWriter& begin_object() { open("{"); return *this; }
  JsonWriter& end_object() { close("}"); return *this; }
  JsonWriter& begin_array(const std::string& key) { item(); buf_ += quote(key) + ":["; depth_first_.push_back(true); return *this; }
  JsonWriter& end_array() { close("]"); return *this; }

  JsonWriter& field(const std::string& key, double v) { return raw(key, fmt17(v)); }
  JsonWriter& field(const std::string& key, int v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, long v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, unsigned long v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, unsigned long long v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
  JsonWriter& field(const std::string& key, const std::string& v) { return raw(key, quote(v)); }
  JsonWriter& field(const std::string& key, const char* v) { return raw(key, quote(v)); }
  JsonWriter& null_field(const std::string& key) { return raw(key, "null"); }
  JsonWriter& object_field(const std::string& key) { item(); buf_ += quote(key) + ":{"; depth_first_.push_back(true); return *this; }
  JsonWriter& element(double v) { item(); buf_ += fmt17(v); return *this; }
  JsonWriter& begin_nested_array() { open("["); return *this; }

  const std::string& str() const { return buf_; }

private:
  void open(const char* c) { item(); buf_ += c; depth_first_.push_back(true); }
  void close(const char* c) { buf_ += c; depth_first_.pop_back(); }
  void item() {
    if (depth_first_.empty()) return;
    if (depth_first_.back()) depth_first_.back() = false;
    else buf_ += ",";
  }
  JsonWriter& raw(const std::string& key, const std::string& v) {
    item();
    buf_ += quote(key) + ":" + v;
    return *this;
  }
  static std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
      }
    }
    out += "\"";
    return out;
  }

  std::string buf_;
  std::vector<bool> depth_first_;
};

}  // namespace dpmix
