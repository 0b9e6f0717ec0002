"""Preset registry for bohmlab.

Shipped scenarios register a factory under a name and are rebuilt on every
lookup, so callers can modify the returned scenario freely.

Example:
    ```python
    from bohmlab.scenarios.registry import PresetRegistry

    @PresetRegistry.register("my-state")
    def my_state() -> Scenario:
        ...

    scenario = PresetRegistry.get("my-state")
    ```
"""

from collections.abc import Callable

from bohmlab.scenarios.base import Scenario

PresetFactory = Callable[[], Scenario]


class PresetRegistry:
    """Central registry of named scenario presets."""

    _factories: dict[str, PresetFactory] = {}

    @classmethod
    def register(cls, name: str) -> Callable[[PresetFactory], PresetFactory]:
        """Decorator to register a preset factory.

        Args:
            name: Unique preset name

        Returns:
            Decorator function

        Raises:
            ValueError: If the name is already taken
        """

        def decorator(factory: PresetFactory) -> PresetFactory:
            if name in cls._factories:
                raise ValueError(f"Preset '{name}' is already registered")
            cls._factories[name] = factory
            return factory

        return decorator

    @classmethod
    def get(cls, name: str) -> Scenario:
        """Build a fresh scenario for a preset.

        Raises:
            ValueError: If the name is not registered
        """
        if name not in cls._factories:
            available = ", ".join(cls._factories) or "none"
            raise ValueError(f"Unknown preset: '{name}'. Available presets: {available}")
        return cls._factories[name]()

    @classmethod
    def list_presets(cls) -> list[str]:
        """Registered names in registration order."""
        return list(cls._factories)

    @classmethod
    def is_registered(cls, name: str) -> bool:
        return name in cls._factories

    @classmethod
    def unregister(cls, name: str) -> None:
        """Remove a preset; unknown names are ignored."""
        cls._factories.pop(name, None)
