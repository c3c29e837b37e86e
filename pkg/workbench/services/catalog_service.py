"""
Soliton Workbench - Catalog Service
Built-in example polytopes loaded from the catalog database
"""

import json
import logging
import os
from typing import Dict, List, Optional

from .errors import ValidationError
from .polytope_service import MomentPolytope, PolytopeService

logger = logging.getLogger(__name__)

# In-memory cache of constructed example polytopes
_polytope_cache: Dict[str, MomentPolytope] = {}


class CatalogService:
    """Service for the built-in example catalog"""

    def __init__(self, db_path: Optional[str] = None):
        """Load the catalog database on initialization"""
        db_path = db_path or os.path.join(os.path.dirname(__file__), 'polytope_catalog.json')
        try:
            with open(db_path, 'r') as f:
                self.catalog = json.load(f)
            logger.info(f"✅ Loaded {len(self.catalog)} example polytopes from catalog")
        except Exception as e:
            logger.error(f"❌ Failed to load polytope catalog: {e}")
            self.catalog = {}

    def names(self) -> List[str]:
        return sorted(self.catalog)

    def list_examples(self) -> List[Dict]:
        return [{'name': name, 'description': self.catalog[name].get('description', ''),
                 'kahler_einstein': self.catalog[name].get('kahler_einstein')}
                for name in self.names()]

    def polytope_data(self, name: str) -> Dict:
        entry = self.catalog.get(name)
        if entry is None:
            raise ValidationError(f"Unknown example '{name}' (known: {', '.join(self.names())})")
        return entry['polytope']

    def get_polytope(self, name: str) -> MomentPolytope:
        """
        Construct (or reuse) an example polytope

        Args:
            name: Catalog key such as 'cp2' or 'bl1cp2'

        Returns:
            MomentPolytope for the example
        """
        if name in _polytope_cache:
            logger.info(f"♻️ Using cached polytope: {name}")
            return _polytope_cache[name]
        polytope = PolytopeService.from_dict(self.polytope_data(name))
        _polytope_cache[name] = polytope
        return polytope

    def expected_kahler_einstein(self, name: str) -> Optional[bool]:
        self.polytope_data(name)
        return self.catalog[name].get('kahler_einstein')
