#pragma once

#include <stdexcept>
#include <string>

namespace nitrial {

// Base for all library errors so callers can catch one type at the boundary.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& what) : Error(what) {}
};

class NonPositiveWeight : public Error {
public:
    explicit NonPositiveWeight(const std::string& what) : Error(what) {}
};

class WeakOrCollinearInstruments : public Error {
public:
    explicit WeakOrCollinearInstruments(const std::string& what) : Error(what) {}
};

class ChainDiverged : public Error {
public:
    explicit ChainDiverged(const std::string& what) : Error(what) {}
};

class ImproperInput : public Error {
public:
    explicit ImproperInput(const std::string& what) : Error(what) {}
};

class InsufficientCompliers : public Error {
public:
    explicit InsufficientCompliers(const std::string& what) : Error(what) {}
};

class PositivityViolation : public Error {
public:
    explicit PositivityViolation(const std::string& what) : Error(what) {}
};

class UnknownScenario : public Error {
public:
    explicit UnknownScenario(const std::string& what) : Error(what) {}
};

class InsufficientRows : public Error {
public:
    explicit InsufficientRows(const std::string& what) : Error(what) {}
};

class MissingReference : public Error {
public:
    explicit MissingReference(const std::string& what) : Error(what) {}
};

class ConfigInvalid : public Error {
public:
    explicit ConfigInvalid(const std::string& what) : Error(what) {}
};

}  // namespace nitrial
