#pragma once

#include <compare>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsd {

/// One knowledge-graph instance: a named fault with its textual signal
/// description and an opaque severity literal.
struct SensorFault {
  std::string id;
  std::string name;
  std::string fault_desc;
  std::string severity;

  bool operator==(const SensorFault&) const = default;
};

struct Term {
  enum class Kind { iri, literal };
  Kind kind = Kind::iri;
  std::string value;     // IRI, or the literal's lexical form
  std::string datatype;  // datatype IRI for typed literals, empty otherwise

  static Term iri(std::string v) { return {Kind::iri, std::move(v), {}}; }
  static Term literal(std::string v, std::string dt = {}) {
    return {Kind::literal, std::move(v), std::move(dt)};
  }
  auto operator<=>(const Term&) const = default;
};

struct Triple {
  Term subject;    // IRI
  Term predicate;  // IRI
  Term object;     // IRI or literal
  auto operator<=>(const Triple&) const = default;
};

/// Vocabulary IRIs owned by this artifact plus the rdf:type predicate.
namespace kgns {
inline const std::string base = "http://example.org/sensor-fault#";
inline const std::string rdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";

Term type_pred();
Term fault_class();
Term name_pred();
Term desc_pred();
Term severity_pred();
Term fault_iri(const std::string& id);
}  // namespace kgns

/// In-memory triple store over an ordered triple set; reads may run
/// concurrently, writes need exclusive access.
class FaultGraph {
 public:
  void insert(Triple t) { triples_.insert(std::move(t)); }
  bool contains(const Triple& t) const { return triples_.count(t) > 0; }
  std::size_t size() const { return triples_.size(); }
  const std::set<Triple>& triples() const { return triples_; }

  /// Adds the four instance triples (type, name, fault_desc, severity).
  /// Rejects a name that is already present.
  void add_fault(const SensorFault& fault);

  /// Basic graph-pattern match; std::nullopt is a wildcard. Results come
  /// back sorted by (subject, predicate, object).
  std::vector<Triple> query(const std::optional<Term>& subject,
                            const std::optional<Term>& predicate,
                            const std::optional<Term>& object) const;

  std::optional<SensorFault> fault_by_name(const std::string& name) const;

  /// All faults, ordered by instance IRI.
  std::vector<SensorFault> all_faults() const;

  bool operator==(const FaultGraph&) const = default;

 private:
  std::set<Triple> triples_;
};

/// Deterministic serialization: prefix directives followed by one sorted
/// triple per line.
std::string to_turtle(const FaultGraph& graph);

struct TurtleParseError : std::runtime_error {
  int line;
  int column;
  TurtleParseError(int line_, int column_, const std::string& what_)
      : std::runtime_error("turtle parse error at " + std::to_string(line_) + ":" +
                           std::to_string(column_) + ": " + what_),
        line(line_),
        column(column_) {}
};

/// Parses the Turtle subset the serializer emits plus 'a', predicate lists
/// (';') and object lists (',').
FaultGraph from_turtle(const std::string& text);

}  // namespace tsd
