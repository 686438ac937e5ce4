"""Output formatting utilities"""

import json
from typing import List, Dict, Any
from tabulate import tabulate


class OutputFormatter:
    @staticmethod
    def format_table(data: List[Dict[str, Any]], headers: List[str] = None) -> str:
        """Format data as a table"""
        if not data:
            return "표시할 데이터가 없습니다"

        if headers is None:
            headers = list(data[0].keys()) if data else []

        rows = []
        for item in data:
            row = [str(item.get(header, '')) for header in headers]
            rows.append(row)

        return tabulate(rows, headers=headers, tablefmt='grid')

    @staticmethod
    def format_json(data: Any, indent: int = 2) -> str:
        """Format data as JSON"""
        return json.dumps(data, indent=indent, ensure_ascii=False, default=str)

    @staticmethod
    def format_size(num_bytes: float) -> str:
        """Decimal units: 1 MB = 10^6 bytes"""
        for unit, scale in (('GB', 1e9), ('MB', 1e6), ('KB', 1e3)):
            if num_bytes >= scale:
                return f"{num_bytes / scale:.3f} {unit}"
        return f"{num_bytes:.0f} B"

    @staticmethod
    def format_receivers(summaries: List[Dict[str, Any]]) -> str:
        """Per-receiver simulation summary"""
        headers = [
            'Receiver',
            'Received',
            'FromAttackers',
            'Verified',
            'AttackerVerified',
            'Rejected',
            'Expired',
            'Unsafe',
            'Stored',
        ]
        formatted_data = []

        for s in summaries:
            formatted_data.append({
                'Receiver': s.get('receiver_id', ''),
                'Received': s.get('received', 0),
                'FromAttackers': s.get('received_from_attackers', 0),
                'Verified': s.get('verified', 0),
                'AttackerVerified': s.get('verified_from_attackers', 0),
                'Rejected': s.get('rejected', 0),
                'Expired': s.get('expired', 0),
                'Unsafe': s.get('unsafe', 0),
                'Stored': OutputFormatter.format_size(s.get('stored_bytes', 0)),
            })

        return OutputFormatter.format_table(formatted_data, headers)
